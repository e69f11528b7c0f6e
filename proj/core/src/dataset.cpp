#include "ctxcd/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ctxcd {

Dataset::Dataset(Eigen::MatrixXd system, std::vector<int> context, DatasetMeta meta)
    : system_(std::move(system)), context_(std::move(context)), meta_(std::move(meta)) {
    if (static_cast<std::size_t>(system_.rows()) != context_.size())
        throw DatasetError("context column length differs from the number of samples");
    if (context_.empty()) throw DatasetError("dataset has no samples");
    values_ = context_;
    std::sort(values_.begin(), values_.end());
    values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
}

std::vector<int> Dataset::rows_with_context(int r) const {
    std::vector<int> rows;
    for (std::size_t i = 0; i < context_.size(); ++i)
        if (context_[i] == r) rows.push_back(static_cast<int>(i));
    return rows;
}

std::size_t Dataset::count_context(int r) const {
    return static_cast<std::size_t>(std::count(context_.begin(), context_.end(), r));
}

Dataset Dataset::masked(int r) const {
    const auto rows = rows_with_context(r);
    if (rows.empty()) throw DatasetError("no samples with context " + std::to_string(r));
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), system_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = system_.row(rows[i]);
    return Dataset(std::move(sub), std::vector<int>(rows.size(), r), meta_);
}

std::vector<std::string> Dataset::column_names() const {
    std::vector<std::string> names;
    for (int i = 0; i < num_system(); ++i) names.push_back("X" + std::to_string(i + 1));
    names.emplace_back("R");
    return names;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw DatasetError("cannot write " + path.string());
    const auto names = data.column_names();
    for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
    out << '\n';
    char buf[32];
    for (std::size_t row = 0; row < data.num_samples(); ++row) {
        for (int c = 0; c < data.num_system(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", data.system()(static_cast<Eigen::Index>(row), c));
            out << buf << ',';
        }
        out << data.context()[row] << '\n';
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        cells.push_back(cell);
    }
    return cells;
}

}  // namespace

Dataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DatasetError(path.string() + " is empty");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header.back() != "R")
        throw DatasetError("expected header X1..XD,R in " + path.string());
    const auto d = header.size() - 1;
    for (std::size_t i = 0; i < d; ++i)
        if (header[i] != "X" + std::to_string(i + 1))
            throw DatasetError("unexpected column '" + header[i] + "' in " + path.string());

    std::vector<double> values;
    std::vector<int> context;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DatasetError("row " + std::to_string(line_no) + " has the wrong number of columns");
        for (std::size_t i = 0; i < d; ++i) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cells[i], &used));
            } catch (const std::exception&) {
                throw DatasetError("bad number '" + cells[i] + "' on row " + std::to_string(line_no));
            }
        }
        int r = 0;
        const auto& c = cells.back();
        const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), r);
        if (ec != std::errc() || ptr != c.data() + c.size())
            throw DatasetError("context value '" + c + "' on row " + std::to_string(line_no) + " is not an integer");
        context.push_back(r);
    }
    const auto n = static_cast<Eigen::Index>(context.size());
    Eigen::MatrixXd system(n, static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d); ++j)
            system(i, j) = values[static_cast<std::size_t>(i) * d + static_cast<std::size_t>(j)];
    return Dataset(std::move(system), std::move(context));
}

}  // namespace ctxcd
