#ifndef CTXCD_SCM_HPP
#define CTXCD_SCM_HPP

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ctxcd/dataset.hpp"
#include "ctxcd/graph.hpp"
#include "ctxcd/rng.hpp"

namespace ctxcd {

class GenerationFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline const std::vector<double>& default_coefficient_pool() {
    static const std::vector<double> pool{1.8, 1.5, 1.2, -1.2, -1.5, -1.8};
    return pool;
}

/// Linear acyclic SCM X_i = sum_j coeff(i, j) X_j + noise_scale(i) * eta_i
/// over D + 1 variables, one of which becomes the context indicator.
struct BaseScm {
    Eigen::MatrixXd coeff;
    Eigen::VectorXd noise_scale;
    int indicator_index = -1;
    double density = 0.0;

    int num_nodes() const { return static_cast<int>(coeff.rows()); }
    /// Mechanism graph in SCM indices (nodes V1..V{D+1}, no context flag).
    DirectedMixedGraph mechanism_graph() const;
};

/// Number of nonzero coefficients for a density s over D + 1 nodes.
int link_count(int num_nodes, double density);

BaseScm generate_base(int num_nodes, double density, std::span<const double> coeff_pool, Rng& rng);

/// Picks the indicator uniformly; its noise scale becomes `indicator_noise`,
/// all others 1.
BaseScm assign_indicator(BaseScm base, Rng& rng, double indicator_noise = 0.2);

struct IndicatorConfig {
    int n_contexts = 2;
    double balance = 1.0;
    /// Adjusted quantile levels (i / n_contexts)^balance, strictly increasing.
    std::vector<double> levels;

    static IndicatorConfig make(int n_contexts, double balance);
};

/// Categorical values 1..n_contexts from the adjusted empirical quantiles.
std::vector<int> threshold_indicator(std::span<const double> values, const IndicatorConfig& cfg);

enum class EditOp { Add, Remove, Flip };
enum class CycleMode { Forbid, Require, RequireLen2 };

std::string to_string(EditOp op);
EditOp edit_op_from_string(const std::string& s);
std::string to_string(CycleMode mode);
CycleMode cycle_mode_from_string(const std::string& s);

struct ContextEdit {
    int context = 0;
    EditOp op = EditOp::Remove;
    int target = 0;   // X_c, SCM index
    int partner = 0;  // X_c', SCM index
};

struct EditConfig {
    int n_contexts = 2;
    double balance = 1.0;
    int n_change = 1;
    std::set<EditOp> ops{EditOp::Remove};
    CycleMode cycles = CycleMode::Forbid;
    std::vector<double> coeff_pool = default_coefficient_pool();
    int max_attempts = 10;
};

/// Base SCM plus per-context coefficient matrices. Context values are
/// 1..n_contexts; context 1 keeps the base mechanisms.
struct MultiContextScm {
    BaseScm base;
    IndicatorConfig indicator;
    std::map<int, Eigen::MatrixXd> per_context_coeff;
    /// Nodes (SCM indices) that received an R -> node edge from edits in each context.
    std::map<int, std::set<int>> r_children;
    std::vector<ContextEdit> edits;

    int num_system() const { return base.num_nodes() - 1; }
    /// System variables keep their SCM order as X1..XD; R is the last node.
    int graph_index(int scm_index) const;
    int scm_index(int graph_index) const;

    std::set<int> edited_nodes() const;
    /// Per-context mechanism graph plus all union R-edges, in graph indices.
    DirectedMixedGraph context_graph(int r) const;
    /// Same graph in SCM indices; used while editing.
    DirectedMixedGraph context_graph_scm(int r) const;
};

MultiContextScm edit_contexts(const BaseScm& base, const EditConfig& cfg, Rng& rng);

struct GeneratorConfig {
    int num_nodes = 8;
    double density = 0.4;
    double indicator_noise = 0.2;
    EditConfig edits;
    int max_base_graphs = 10;
};

/// Base generation, indicator choice and edits, retried on fresh base graphs.
/// Throws GenerationFailed when every base graph is exhausted.
MultiContextScm generate_scm(const GeneratorConfig& cfg, Rng& rng);

Dataset sample(const MultiContextScm& scm, int n, Rng& rng);

struct GroundTruth {
    std::map<int, DirectedMixedGraph> descriptive;
    std::map<int, DirectedMixedGraph> physical;
    DirectedMixedGraph union_graph;
    DirectedMixedGraph labeled_union;
};

GroundTruth ground_truth(const MultiContextScm& scm);

/// Executable versions of the modelling assumptions.
struct AssumptionReport {
    bool weak_context_acyclic = false;    // every per-context graph is a DAG
    bool strong_context_acyclic = false;  // additionally no union cycle reaches R
    bool weak_context_sufficient = false; // changed mechanisms are union children of R
    bool causal_sufficient = false;       // independent noises, no latent nodes
    bool cycles_are_flips = false;        // every union cycle has length 2
    bool union_acyclic = false;
};

AssumptionReport check_assumptions(const MultiContextScm& scm);

std::string scm_to_json(const MultiContextScm& scm);
MultiContextScm scm_from_json(const std::string& text);
void write_scm(const std::filesystem::path& path, const MultiContextScm& scm);
MultiContextScm read_scm(const std::filesystem::path& path);

std::string ground_truth_to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const std::string& text);
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_ground_truth(const std::filesystem::path& path);

}  // namespace ctxcd

#endif  // CTXCD_SCM_HPP
