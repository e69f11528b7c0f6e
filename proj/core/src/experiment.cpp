#include "ctxcd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "ctxcd/graph_io.hpp"
#include "json_detail.hpp"

namespace ctxcd {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (auto t = trim(item); !t.empty()) out.push_back(t);
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError("invalid value '" + value + "' for " + key);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("invalid boolean '" + value + "' for " + key);
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

template <typename T, typename F>
std::string join(const T& items, F&& fmt) {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += ',';
        out += fmt(item);
    }
    return out;
}

template <typename F>
auto wrap_enum(const std::string& key, const std::string& value, F&& parse) {
    try {
        return parse(value);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
    if (nodes < 3) throw ConfigError("nodes must be at least 3 (two system variables plus the indicator)");
    if (!(density > 0.0 && density <= 1.0)) throw ConfigError("density must lie in (0, 1]");
    if (link_count(nodes, density) > nodes * (nodes - 1) / 2)
        throw ConfigError("density " + format_double(density) + " needs more links than a DAG on " +
                          std::to_string(nodes) + " nodes can hold");
    if (n_contexts < 2) throw ConfigError("n_contexts must be at least 2");
    if (!(balance > 0.0)) throw ConfigError("balance must be positive");
    if (n_change < 1) throw ConfigError("n_change must be positive");
    if (ops.empty()) throw ConfigError("ops must name at least one edit operation");
    if (cycles != CycleMode::Forbid && !ops.count(EditOp::Add) && !ops.count(EditOp::Flip))
        throw ConfigError("cycles=" + to_string(cycles) + " cannot be met with remove-only edits");
    if (cycles == CycleMode::RequireLen2 && !ops.count(EditOp::Flip))
        throw ConfigError("cycles=require-len2 needs the flip operation");
    if (!(indicator_noise > 0.0)) throw ConfigError("indicator_noise must be positive");
    if (sample_sizes.empty()) throw ConfigError("sample_sizes must not be empty");
    for (int n : sample_sizes)
        if (n < 1) throw ConfigError("sample sizes must be positive");
    if (trials < 1) throw ConfigError("trials must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (max_sepset_size && *max_sepset_size < 0) throw ConfigError("max_sepset_size must be nonnegative");
    if (methods.empty()) throw ConfigError("methods must not be empty");
    if (link_assumptions.empty()) throw ConfigError("link_assumptions must not be empty");
    if (bootstrap_iterations < 1) throw ConfigError("bootstrap_iterations must be positive");
}

GeneratorConfig ExperimentConfig::generator() const {
    GeneratorConfig g;
    g.num_nodes = nodes;
    g.density = density;
    g.indicator_noise = indicator_noise;
    g.edits.n_contexts = n_contexts;
    g.edits.balance = balance;
    g.edits.n_change = n_change;
    g.edits.ops = ops;
    g.edits.cycles = cycles;
    return g;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& raw) {
    const auto value = trim(raw);
    if (key == "nodes") cfg.nodes = parse_number<int>(key, value);
    else if (key == "density") cfg.density = parse_number<double>(key, value);
    else if (key == "n_contexts") cfg.n_contexts = parse_number<int>(key, value);
    else if (key == "balance") cfg.balance = parse_number<double>(key, value);
    else if (key == "n_change") cfg.n_change = parse_number<int>(key, value);
    else if (key == "ops") {
        cfg.ops.clear();
        for (const auto& s : split_list(value)) cfg.ops.insert(wrap_enum(key, s, edit_op_from_string));
    } else if (key == "cycles") cfg.cycles = wrap_enum(key, value, cycle_mode_from_string);
    else if (key == "indicator_noise") cfg.indicator_noise = parse_number<double>(key, value);
    else if (key == "sample_sizes") {
        cfg.sample_sizes.clear();
        for (const auto& s : split_list(value)) cfg.sample_sizes.push_back(parse_number<int>(key, s));
    } else if (key == "trials") cfg.trials = parse_number<int>(key, value);
    else if (key == "alpha") cfg.alpha = parse_number<double>(key, value);
    else if (key == "max_sepset_size") {
        if (value == "none") cfg.max_sepset_size.reset();
        else cfg.max_sepset_size = parse_number<int>(key, value);
    } else if (key == "methods") {
        cfg.methods.clear();
        for (const auto& s : split_list(value)) cfg.methods.push_back(wrap_enum(key, s, method_from_string));
    } else if (key == "link_assumptions") {
        cfg.link_assumptions.clear();
        for (const auto& s : split_list(value))
            cfg.link_assumptions.push_back(wrap_enum(key, s, link_mode_from_string));
    } else if (key == "cit") cfg.cit = wrap_enum(key, value, cit_mode_from_string);
    else if (key == "master_seed") cfg.master_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "bootstrap_iterations") cfg.bootstrap_iterations = parse_number<int>(key, value);
    else if (key == "write_graphs") cfg.write_graphs = parse_bool(key, value);
    else if (key == "out_dir") cfg.out_dir = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return cfg;
}

ExperimentConfig read_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string config_to_text(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "nodes = " << cfg.nodes << '\n'
        << "density = " << format_double(cfg.density) << '\n'
        << "n_contexts = " << cfg.n_contexts << '\n'
        << "balance = " << format_double(cfg.balance) << '\n'
        << "n_change = " << cfg.n_change << '\n'
        << "ops = " << join(cfg.ops, [](EditOp op) { return to_string(op); }) << '\n'
        << "cycles = " << to_string(cfg.cycles) << '\n'
        << "indicator_noise = " << format_double(cfg.indicator_noise) << '\n'
        << "sample_sizes = " << join(cfg.sample_sizes, [](int n) { return std::to_string(n); }) << '\n'
        << "trials = " << cfg.trials << '\n'
        << "alpha = " << format_double(cfg.alpha) << '\n'
        << "max_sepset_size = " << (cfg.max_sepset_size ? std::to_string(*cfg.max_sepset_size) : "none") << '\n'
        << "methods = " << join(cfg.methods, [](Method m) { return to_string(m); }) << '\n'
        << "link_assumptions = " << join(cfg.link_assumptions, [](LinkMode m) { return to_string(m); }) << '\n'
        << "cit = " << to_string(cfg.cit) << '\n'
        << "master_seed = " << cfg.master_seed << '\n'
        << "bootstrap_iterations = " << cfg.bootstrap_iterations << '\n'
        << "write_graphs = " << (cfg.write_graphs ? "true" : "false") << '\n'
        << "out_dir = " << cfg.out_dir << '\n';
    return out.str();
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Trials

namespace {

MetricsRow make_row(int trial, const std::string& method, const std::string& link, int n, Scope scope,
                    const std::string& context, const DirectedMixedGraph& pred, const DirectedMixedGraph& truth,
                    long tests) {
    const auto sk = skeleton_metrics(pred, truth, scope);
    const auto em = edgemark_metrics(pred, truth, scope);
    MetricsRow row;
    row.trial_id = trial;
    row.method = method;
    row.link_assumptions = link;
    row.n_samples = n;
    row.scope = to_string(scope);
    row.context = context;
    row.tpr = sk.tpr;
    row.fpr = sk.fpr;
    row.em_precision = em.precision;
    row.em_recall = em.recall;
    row.test_count = tests;
    return row;
}

TrialResult failed_trial(TrialResult tr, const std::string& why) {
    tr.generation_failed = true;
    tr.failure = why;
    tr.rows.clear();
    MetricsRow row;
    row.trial_id = tr.trial_id;
    row.failed = true;
    tr.rows.push_back(row);
    return tr;
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, int trial_id) {
    TrialResult tr;
    tr.trial_id = trial_id;
    tr.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(trial_id));
    auto rng = make_rng(tr.seed);

    MultiContextScm scm;
    try {
        scm = generate_scm(cfg.generator(), rng);
    } catch (const GenerationFailed& e) {
        return failed_trial(std::move(tr), e.what());
    }
    const auto truth = ground_truth(scm);
    const int d = scm.num_system();

    for (int n : cfg.sample_sizes) {
        std::optional<Dataset> data;
        std::optional<CiDispatcher> cit;
        if (cfg.cit == CitMode::Oracle) {
            cit.emplace(CiDispatcher::oracle({truth.descriptive, truth.union_graph}, d));
        } else {
            auto data_rng = make_rng(derive_seed(tr.seed, static_cast<std::uint64_t>(n)));
            try {
                data.emplace(sample(scm, n, data_rng));
            } catch (const std::invalid_argument& e) {
                return failed_trial(std::move(tr), std::string("sampling failed: ") + e.what());
            }
            if (data->context_values().size() < 2)
                return failed_trial(std::move(tr), "sample of size " + std::to_string(n) + " has a single context");
            cit.emplace(CiDispatcher::finite_sample(*data));
        }

        for (Method method : cfg.methods) {
            for (LinkMode link : cfg.link_assumptions) {
                DiscoveryConfig dc;
                dc.alpha = cfg.alpha;
                dc.max_sepset_size = cfg.max_sepset_size;
                dc.method = method;
                dc.links = LinkAssumptions::from_graph(link, truth.union_graph);
                const auto res = discover(*cit, dc);
                const auto m = to_string(method);
                const auto l = to_string(link);
                for (Scope scope : {Scope::IncludeR, Scope::SystemOnly}) {
                    for (const auto& [r, g] : res.context_graphs)
                        tr.rows.push_back(make_row(trial_id, m, l, n, scope, std::to_string(r), g,
                                                   truth.descriptive.at(r), res.test_count));
                    tr.rows.push_back(
                        make_row(trial_id, m, l, n, scope, "union", res.union_graph, truth.union_graph, res.test_count));
                }
            }
        }
    }
    return tr;
}

std::string metrics_csv_header() {
    return "trial_id,method,link_assumptions,n_samples,scope,context,tpr,fpr,em_precision,em_recall,test_count,failed";
}

std::string metrics_csv_row(const MetricsRow& r) {
    std::ostringstream out;
    out << r.trial_id << ',';
    if (r.failed) {
        out << ",,,,,,,,,,1";
        return out.str();
    }
    out << r.method << ',' << r.link_assumptions << ',' << r.n_samples << ',' << r.scope << ',' << r.context << ','
        << format_optional(r.tpr) << ',' << format_optional(r.fpr) << ',' << format_optional(r.em_precision) << ','
        << format_optional(r.em_recall) << ',' << r.test_count << ",0";
    return out.str();
}

std::string summary_csv(const ExperimentConfig& cfg, const std::vector<TrialResult>& trials) {
    using Key = std::tuple<std::string, std::string, int, std::string, std::string, std::string>;
    static const std::vector<std::string> metric_names{"tpr", "fpr", "em_precision", "em_recall", "test_count"};
    auto pick = [](const MetricsRow& r, const std::string& metric) -> std::optional<double> {
        if (metric == "tpr") return r.tpr;
        if (metric == "fpr") return r.fpr;
        if (metric == "em_precision") return r.em_precision;
        if (metric == "em_recall") return r.em_recall;
        return static_cast<double>(r.test_count);
    };

    std::map<Key, std::vector<double>> groups;
    for (const auto& tr : trials) {
        if (tr.generation_failed) continue;
        // Per (method, link, n, scope): context rows are averaged within the trial.
        std::map<std::tuple<std::string, std::string, int, std::string>, std::vector<const MetricsRow*>> contexts;
        for (const auto& row : tr.rows) {
            const auto base = std::make_tuple(row.method, row.link_assumptions, row.n_samples, row.scope);
            if (row.context == "union") {
                for (const auto& metric : metric_names)
                    if (const auto v = pick(row, metric))
                        groups[std::tuple_cat(base, std::make_tuple(std::string("union"), metric))].push_back(*v);
            } else {
                contexts[base].push_back(&row);
            }
        }
        for (const auto& [base, rows] : contexts) {
            for (const auto& metric : metric_names) {
                std::vector<std::optional<double>> values;
                for (const auto* row : rows) values.push_back(pick(*row, metric));
                if (const auto v = mean_of_present(values))
                    groups[std::tuple_cat(base, std::make_tuple(std::string("context-avg"), metric))].push_back(*v);
            }
        }
    }

    std::ostringstream out;
    out << "method,link_assumptions,n_samples,scope,graph,metric,mean,lo,hi,trials,iterations\n";
    std::uint64_t index = 0;
    for (const auto& [key, values] : groups) {
        auto rng = make_rng(derive_seed(cfg.master_seed ^ 0xb007b007b007b007ULL, index++));
        const auto b = bootstrap(values, cfg.bootstrap_iterations, rng);
        const auto& [method, link, n, scope, graph, metric] = key;
        out << method << ',' << link << ',' << n << ',' << scope << ',' << graph << ',' << metric << ','
            << format_double(b.mean) << ',' << format_double(b.lo) << ',' << format_double(b.hi) << ','
            << values.size() << ',' << b.iterations << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

void write_trial_graphs(const std::filesystem::path& dir, const ExperimentConfig& cfg, int trial_id) {
    auto rng = make_rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(trial_id)));
    const auto scm = generate_scm(cfg.generator(), rng);
    std::filesystem::create_directories(dir);
    write_scm(dir / "scm.json", scm);
    write_ground_truth(dir / "truth.json", ground_truth(scm));
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& cfg, unsigned threads) {
    cfg.validate();
    const std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw ConfigError("cannot create output directory " + dir.string());
    {
        std::ofstream probe(dir / "manifest.json");
        if (!probe) throw ConfigError("output directory " + dir.string() + " is not writable");
    }

    ExperimentSummary summary;
    summary.trials.resize(static_cast<std::size_t>(cfg.trials));
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(cfg.trials));

    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (int t = next++; t < cfg.trials; t = next++) {
            try {
                summary.trials[static_cast<std::size_t>(t)] = run_trial(cfg, t);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = cfg.trials;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);

    const auto config_text = config_to_text(cfg);
    nlohmann::json manifest;
    manifest["config"] = config_text;
    manifest["config_hash"] = fnv1a_hex(config_text);
    manifest["trials"] = nlohmann::json::array();
    std::ostringstream metrics;
    metrics << metrics_csv_header() << '\n';
    for (const auto& tr : summary.trials) {
        manifest["trials"].push_back(
            {{"trial_id", tr.trial_id}, {"seed", tr.seed}, {"generation_failed", tr.generation_failed}});
        summary.failed += tr.generation_failed;
        for (const auto& row : tr.rows) metrics << metrics_csv_row(row) << '\n';
        if (cfg.write_graphs && !tr.generation_failed)
            write_trial_graphs(dir / "trials" / std::to_string(tr.trial_id), cfg, tr.trial_id);
    }
    write_file(dir / "manifest.json", manifest.dump(2) + '\n');
    write_file(dir / "metrics.csv", metrics.str());
    write_file(dir / "summary.csv", summary_csv(cfg, summary.trials));
    write_file(dir / "failed.txt", std::to_string(summary.failed) + '\n');
    return summary;
}

ReplayResult replay(const std::filesystem::path& dir, int trial_id) {
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) throw std::runtime_error("no manifest.json in " + dir.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError(std::string("unreadable manifest: ") + e.what());
    }
    const auto text = manifest.value("config", std::string());
    if (fnv1a_hex(text) != manifest.value("config_hash", std::string()))
        throw IntegrityError("manifest config hash does not match its config text");
    const auto cfg = parse_config(text);
    if (trial_id < 0 || trial_id >= cfg.trials)
        throw std::out_of_range("trial " + std::to_string(trial_id) + " is not part of this experiment");

    const auto expected_seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(trial_id));
    for (const auto& t : manifest.at("trials"))
        if (t.at("trial_id").get<int>() == trial_id && t.at("seed").get<std::uint64_t>() != expected_seed)
            throw IntegrityError("recorded seed of trial " + std::to_string(trial_id) + " does not match derivation");

    ReplayResult out;
    out.trial = run_trial(cfg, trial_id);

    std::vector<std::string> recorded;
    if (std::ifstream in(dir / "metrics.csv"); in) {
        std::string line;
        const auto prefix = std::to_string(trial_id) + ",";
        while (std::getline(in, line))
            if (line.rfind(prefix, 0) == 0) recorded.push_back(line);
    }
    std::vector<std::string> replayed;
    for (const auto& row : out.trial.rows) replayed.push_back(metrics_csv_row(row));
    out.matches = recorded == replayed;
    return out;
}

}  // namespace ctxcd
