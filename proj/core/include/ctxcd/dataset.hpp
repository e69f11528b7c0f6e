#ifndef CTXCD_DATASET_HPP
#define CTXCD_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ctxcd {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetMeta {
    std::uint64_t seed = 0;
    std::string config_hash;
};

/// Samples of D continuous system variables plus one categorical context
/// column. Column ids follow graph node order: 0..D-1 are X1..XD and D is R.
class Dataset {
public:
    Dataset(Eigen::MatrixXd system, std::vector<int> context, DatasetMeta meta = {});

    std::size_t num_samples() const { return static_cast<std::size_t>(system_.rows()); }
    int num_system() const { return static_cast<int>(system_.cols()); }
    int num_columns() const { return num_system() + 1; }
    int context_column() const { return num_system(); }
    bool is_context(int column) const { return column == context_column(); }

    const Eigen::MatrixXd& system() const { return system_; }
    const std::vector<int>& context() const { return context_; }
    /// Sorted distinct context values.
    const std::vector<int>& context_values() const { return values_; }
    std::vector<int> rows_with_context(int r) const;
    std::size_t count_context(int r) const;
    const DatasetMeta& meta() const { return meta_; }

    /// Materializes the rows with R = r (the context column is kept).
    Dataset masked(int r) const;

    std::vector<std::string> column_names() const;

private:
    Eigen::MatrixXd system_;
    std::vector<int> context_;
    std::vector<int> values_;
    DatasetMeta meta_;
};

/// CSV with header X1..XD,R; floats printed with round-trip precision.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace ctxcd

#endif  // CTXCD_DATASET_HPP
