#ifndef CTXCD_EXPERIMENT_HPP
#define CTXCD_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctxcd/citest.hpp"
#include "ctxcd/discovery.hpp"
#include "ctxcd/metrics.hpp"
#include "ctxcd/scm.hpp"

namespace ctxcd {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    int nodes = 8;  // D + 1, indicator included
    double density = 0.4;
    int n_contexts = 2;
    double balance = 1.0;
    int n_change = 1;
    std::set<EditOp> ops{EditOp::Remove};
    CycleMode cycles = CycleMode::Forbid;
    double indicator_noise = 0.2;
    std::vector<int> sample_sizes{1000};
    int trials = 100;
    double alpha = 0.05;
    std::optional<int> max_sepset_size;
    std::vector<Method> methods{Method::AC, Method::Masked, Method::Pooled, Method::Baseline};
    std::vector<LinkMode> link_assumptions{LinkMode::None, LinkMode::RChildren, LinkMode::RAll};
    CitMode cit = CitMode::ParcorrMixed;
    std::uint64_t master_seed = 0;
    int bootstrap_iterations = 200;
    bool write_graphs = false;
    std::string out_dir = "results";

    void validate() const;
    GeneratorConfig generator() const;
};

/// Flat `key = value` text; `#` starts a comment, lists are comma separated.
/// Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig read_config(const std::filesystem::path& path);
/// Applies one `key=value` assignment.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Canonical text with every key in a fixed order; parse_config round-trips it.
std::string config_to_text(const ExperimentConfig& cfg);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

struct MetricsRow {
    int trial_id = 0;
    std::string method;
    std::string link_assumptions;
    int n_samples = 0;
    std::string scope;
    std::string context;  // context value or "union"
    std::optional<double> tpr;
    std::optional<double> fpr;
    std::optional<double> em_precision;
    std::optional<double> em_recall;
    long test_count = 0;
    bool failed = false;
};

struct TrialResult {
    int trial_id = 0;
    std::uint64_t seed = 0;
    bool generation_failed = false;
    std::string failure;
    std::vector<MetricsRow> rows;
};

/// Generates, samples, discovers and evaluates one trial. Depends only on
/// (cfg, trial_id).
TrialResult run_trial(const ExperimentConfig& cfg, int trial_id);

struct ExperimentSummary {
    std::vector<TrialResult> trials;
    int failed = 0;
};

/// Runs all trials on `threads` workers (0 = hardware concurrency) and writes
/// manifest.json, metrics.csv, summary.csv and failed.txt to cfg.out_dir.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, unsigned threads = 0);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

/// Bootstrap summary grouped by method, link assumption, sample size, scope
/// and graph (context average or union).
std::string summary_csv(const ExperimentConfig& cfg, const std::vector<TrialResult>& trials);

struct ReplayResult {
    TrialResult trial;
    bool matches = false;  // identical to the recorded metrics rows
};

/// Re-runs a trial from a results directory after checking the manifest hash.
ReplayResult replay(const std::filesystem::path& dir, int trial_id);

}  // namespace ctxcd

#endif  // CTXCD_EXPERIMENT_HPP
