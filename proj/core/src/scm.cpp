#include "ctxcd/scm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json_detail.hpp"

namespace ctxcd {

DirectedMixedGraph BaseScm::mechanism_graph() const {
    std::vector<Node> nodes;
    for (int i = 0; i < num_nodes(); ++i) nodes.push_back({"V" + std::to_string(i + 1), false});
    DirectedMixedGraph g(std::move(nodes));
    for (int i = 0; i < num_nodes(); ++i)
        for (int j = 0; j < num_nodes(); ++j)
            if (coeff(i, j) != 0.0) g.add_directed(j, i);
    return g;
}

int link_count(int num_nodes, double density) {
    const double d = num_nodes - 1;
    return static_cast<int>(std::lround(density * d * (d + 1)));
}

BaseScm generate_base(int num_nodes, double density, std::span<const double> coeff_pool, Rng& rng) {
    if (num_nodes < 3) throw std::invalid_argument("a base SCM needs D >= 2 system variables plus the indicator");
    if (!(density > 0.0 && density <= 1.0)) throw std::invalid_argument("density must lie in (0, 1]");
    if (coeff_pool.empty()) throw std::invalid_argument("coefficient pool is empty");
    const int links = link_count(num_nodes, density);
    const int max_links = num_nodes * (num_nodes - 1) / 2;
    if (links > max_links)
        throw std::invalid_argument("density " + std::to_string(density) + " needs " + std::to_string(links) +
                                    " links but an acyclic graph on " + std::to_string(num_nodes) +
                                    " nodes holds at most " + std::to_string(max_links));

    std::vector<int> order(static_cast<std::size_t>(num_nodes));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::pair<int, int>> candidates;  // (parent, child)
    for (int a = 0; a < num_nodes; ++a)
        for (int b = a + 1; b < num_nodes; ++b)
            candidates.emplace_back(order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)]);
    std::shuffle(candidates.begin(), candidates.end(), rng);

    BaseScm base;
    base.coeff = Eigen::MatrixXd::Zero(num_nodes, num_nodes);
    base.noise_scale = Eigen::VectorXd::Ones(num_nodes);
    base.density = density;
    std::uniform_int_distribution<std::size_t> pick(0, coeff_pool.size() - 1);
    for (int e = 0; e < links; ++e) {
        const auto [parent, child] = candidates[static_cast<std::size_t>(e)];
        base.coeff(child, parent) = coeff_pool[pick(rng)];
    }
    return base;
}

BaseScm assign_indicator(BaseScm base, Rng& rng, double indicator_noise) {
    if (base.num_nodes() < 2) throw std::invalid_argument("no system variable remains next to the indicator");
    std::uniform_int_distribution<int> pick(0, base.num_nodes() - 1);
    base.indicator_index = pick(rng);
    base.noise_scale = Eigen::VectorXd::Ones(base.num_nodes());
    base.noise_scale(base.indicator_index) = indicator_noise;
    return base;
}

IndicatorConfig IndicatorConfig::make(int n_contexts, double balance) {
    if (n_contexts < 2) throw std::invalid_argument("need at least two contexts");
    if (!(balance > 0.0)) throw std::invalid_argument("balance factor must be positive");
    IndicatorConfig cfg{n_contexts, balance, {}};
    for (int i = 1; i < n_contexts; ++i)
        cfg.levels.push_back(std::pow(static_cast<double>(i) / n_contexts, balance));
    return cfg;
}

std::vector<int> threshold_indicator(std::span<const double> values, const IndicatorConfig& cfg) {
    if (values.empty()) throw std::invalid_argument("cannot threshold an empty vector");
    if (cfg.levels.size() + 1 != static_cast<std::size_t>(cfg.n_contexts))
        throw std::invalid_argument("indicator config needs n_contexts - 1 quantile levels");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) throw std::invalid_argument("quantiles of a constant vector are undefined");

    std::vector<double> thresholds;
    for (double level : cfg.levels) {
        const double h = level * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, sorted.size() - 1);
        thresholds.push_back(sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]));
    }
    std::vector<int> out(values.size());
    std::vector<std::size_t> counts(static_cast<std::size_t>(cfg.n_contexts), 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        int r = 1;
        for (double t : thresholds)
            if (values[i] >= t) ++r;
        out[i] = r;
        ++counts[static_cast<std::size_t>(r - 1)];
    }
    for (std::size_t r = 0; r < counts.size(); ++r)
        if (counts[r] == 0) throw std::invalid_argument("context " + std::to_string(r + 1) + " received no samples");
    return out;
}

std::string to_string(EditOp op) {
    switch (op) {
        case EditOp::Add: return "add";
        case EditOp::Remove: return "remove";
        case EditOp::Flip: return "flip";
    }
    return "remove";
}

EditOp edit_op_from_string(const std::string& s) {
    if (s == "add") return EditOp::Add;
    if (s == "remove") return EditOp::Remove;
    if (s == "flip") return EditOp::Flip;
    throw std::invalid_argument("unknown edit operation '" + s + "'");
}

std::string to_string(CycleMode mode) {
    switch (mode) {
        case CycleMode::Forbid: return "forbid";
        case CycleMode::Require: return "require";
        case CycleMode::RequireLen2: return "require-len2";
    }
    return "forbid";
}

CycleMode cycle_mode_from_string(const std::string& s) {
    if (s == "forbid") return CycleMode::Forbid;
    if (s == "require") return CycleMode::Require;
    if (s == "require-len2" || s == "require_len2") return CycleMode::RequireLen2;
    throw std::invalid_argument("unknown cycle mode '" + s + "'");
}

int MultiContextScm::graph_index(int s) const {
    const int k = base.indicator_index;
    if (s == k) return num_system();
    return s < k ? s : s - 1;
}

int MultiContextScm::scm_index(int g) const {
    const int k = base.indicator_index;
    if (g == num_system()) return k;
    return g < k ? g : g + 1;
}

std::set<int> MultiContextScm::edited_nodes() const {
    std::set<int> out;
    for (const auto& [r, nodes] : r_children) out.insert(nodes.begin(), nodes.end());
    return out;
}

DirectedMixedGraph MultiContextScm::context_graph_scm(int r) const {
    const auto it = per_context_coeff.find(r);
    if (it == per_context_coeff.end()) throw std::out_of_range("unknown context " + std::to_string(r));
    const auto& a = it->second;
    const int n = base.num_nodes();
    const int k = base.indicator_index;
    std::vector<Node> nodes;
    for (int i = 0; i < n; ++i)
        nodes.push_back({i == k ? std::string("R") : "X" + std::to_string(graph_index(i) + 1), i == k});
    DirectedMixedGraph g(std::move(nodes));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (a(i, j) != 0.0) g.add_directed(j, i);
    for (int c : edited_nodes()) g.add_directed(k, c);
    return g;
}

DirectedMixedGraph MultiContextScm::context_graph(int r) const {
    const auto scm_graph = context_graph_scm(r);
    auto g = DirectedMixedGraph::with_system_nodes(static_cast<std::size_t>(num_system()), true);
    for (const auto& e : scm_graph.edges()) g.add_directed(graph_index(e.src), graph_index(e.dst));
    return g;
}

namespace {

bool reaches_indicator_through_cycle(const DirectedMixedGraph& union_graph, int indicator) {
    const auto anc = ancestors(union_graph, indicator);
    for (const auto& comp : strongly_connected_components(union_graph)) {
        if (comp.size() < 2) continue;
        for (int v : comp)
            if (anc.count(v)) return true;
    }
    return false;
}

DirectedMixedGraph union_graph_scm(const MultiContextScm& scm) {
    std::vector<DirectedMixedGraph> graphs;
    for (const auto& [r, a] : scm.per_context_coeff) graphs.push_back(scm.context_graph_scm(r));
    return union_of_graphs(graphs);
}

bool edit_is_valid(const MultiContextScm& scm, CycleMode mode, bool last_edit) {
    for (const auto& [r, a] : scm.per_context_coeff)
        if (!is_acyclic(scm.context_graph_scm(r))) return false;
    const auto u = union_graph_scm(scm);
    switch (mode) {
        case CycleMode::Forbid:
            return is_acyclic(u);
        case CycleMode::Require:
            return !last_edit || !is_acyclic(u);
        case CycleMode::RequireLen2:
            if (!cycles_are_edge_flips(u)) return false;
            if (reaches_indicator_through_cycle(u, scm.base.indicator_index)) return false;
            return !last_edit || !is_acyclic(u);
    }
    return false;
}

template <typename T>
const T& pick_one(const std::vector<T>& items, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, items.size() - 1);
    return items[pick(rng)];
}

// Applies one random edit to context r; false when the drawn node admits no
// edit of the drawn kind.
bool propose_edit(MultiContextScm& scm, int r, const EditConfig& cfg, Rng& rng) {
    const int n = scm.base.num_nodes();
    const int k = scm.base.indicator_index;
    auto& a = scm.per_context_coeff.at(r);

    std::vector<int> system;
    for (int i = 0; i < n; ++i)
        if (i != k) system.push_back(i);
    const int c = pick_one(system, rng);
    const std::vector<EditOp> ops(cfg.ops.begin(), cfg.ops.end());
    const EditOp op = pick_one(ops, rng);

    std::vector<int> partners;
    for (int j : system) {
        if (j == c) continue;
        const bool adjacent = a(j, c) != 0.0 || a(c, j) != 0.0;
        if (op == EditOp::Add ? !adjacent : a(j, c) != 0.0) partners.push_back(j);
    }
    if (partners.empty()) return false;
    const int p = pick_one(partners, rng);

    switch (op) {
        case EditOp::Add: {
            std::uniform_int_distribution<std::size_t> pick(0, cfg.coeff_pool.size() - 1);
            a(p, c) = cfg.coeff_pool[pick(rng)];
            scm.r_children[r].insert(p);
            break;
        }
        case EditOp::Remove:
            a(p, c) = 0.0;
            scm.r_children[r].insert(p);
            break;
        case EditOp::Flip:
            a(c, p) = a(p, c);
            a(p, c) = 0.0;
            scm.r_children[r].insert(c);
            scm.r_children[r].insert(p);
            break;
    }
    scm.edits.push_back({r, op, c, p});
    return true;
}

}  // namespace

MultiContextScm edit_contexts(const BaseScm& base, const EditConfig& cfg, Rng& rng) {
    if (cfg.n_change < 1) throw std::invalid_argument("n_change must be at least 1");
    if (cfg.ops.empty()) throw std::invalid_argument("no edit operations allowed");
    if (base.indicator_index < 0 || base.indicator_index >= base.num_nodes())
        throw std::invalid_argument("base SCM has no context indicator");
    if (cfg.cycles != CycleMode::Forbid && !cfg.ops.count(EditOp::Add) && !cfg.ops.count(EditOp::Flip))
        throw std::invalid_argument("remove-only edits cannot create union cycles");
    if (cfg.cycles == CycleMode::RequireLen2 && !cfg.ops.count(EditOp::Flip))
        throw std::invalid_argument("length-2 union cycles require flip edits");
    if (cfg.max_attempts < 1) throw std::invalid_argument("max_attempts must be positive");

    MultiContextScm scm;
    scm.base = base;
    scm.indicator = IndicatorConfig::make(cfg.n_contexts, cfg.balance);
    for (int r = 1; r <= cfg.n_contexts; ++r) scm.per_context_coeff[r] = base.coeff;

    for (int r = 2; r <= cfg.n_contexts; ++r) {
        for (int e = 0; e < cfg.n_change; ++e) {
            const bool last = r == cfg.n_contexts && e + 1 == cfg.n_change;
            bool accepted = false;
            for (int attempt = 0; attempt < cfg.max_attempts && !accepted; ++attempt) {
                auto candidate = scm;
                if (!propose_edit(candidate, r, cfg, rng)) continue;
                if (!edit_is_valid(candidate, cfg.cycles, last)) continue;
                scm = std::move(candidate);
                accepted = true;
            }
            if (!accepted)
                throw GenerationFailed("edit " + std::to_string(e + 1) + " of context " + std::to_string(r) +
                                       " failed after " + std::to_string(cfg.max_attempts) + " attempts");
        }
    }
    return scm;
}

MultiContextScm generate_scm(const GeneratorConfig& cfg, Rng& rng) {
    for (int attempt = 0; attempt < cfg.max_base_graphs; ++attempt) {
        auto base = generate_base(cfg.num_nodes, cfg.density, cfg.edits.coeff_pool, rng);
        base = assign_indicator(std::move(base), rng, cfg.indicator_noise);
        try {
            return edit_contexts(base, cfg.edits, rng);
        } catch (const GenerationFailed&) {
        }
    }
    throw GenerationFailed("no valid multi-context SCM after " + std::to_string(cfg.max_base_graphs) + " base graphs");
}

namespace {

// Kahn's algorithm with ascending-index tie breaking.
std::vector<int> topological_order(const DirectedMixedGraph& g) {
    const int n = static_cast<int>(g.num_nodes());
    std::vector<int> indegree(static_cast<std::size_t>(n), 0);
    for (int v = 0; v < n; ++v) indegree[static_cast<std::size_t>(v)] = static_cast<int>(g.parents(v).size());
    std::set<int> ready;
    for (int v = 0; v < n; ++v)
        if (indegree[static_cast<std::size_t>(v)] == 0) ready.insert(v);
    std::vector<int> order;
    while (!ready.empty()) {
        const int v = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(v);
        for (int w : g.children(v))
            if (--indegree[static_cast<std::size_t>(w)] == 0) ready.insert(w);
    }
    if (static_cast<int>(order.size()) != n) throw GraphError("graph has a directed cycle");
    return order;
}

}  // namespace

Dataset sample(const MultiContextScm& scm, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample size must be positive");
    const int nodes = scm.base.num_nodes();
    const int k = scm.base.indicator_index;
    const auto& c = scm.base.noise_scale;

    Eigen::MatrixXd eta(n, nodes);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < nodes; ++j) eta(i, j) = normal(rng);

    // First pass: the indicator and its ancestors follow the base SCM.
    const auto base_graph = scm.base.mechanism_graph();
    const auto upstream = ancestors(base_graph, k);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, nodes);
    for (int v : topological_order(base_graph)) {
        if (!upstream.count(v)) continue;
        x.col(v) = c(v) * eta.col(v);
        for (int j = 0; j < nodes; ++j)
            if (scm.base.coeff(v, j) != 0.0) x.col(v) += scm.base.coeff(v, j) * x.col(j);
    }
    const Eigen::VectorXd indicator_values = x.col(k);
    const auto context = threshold_indicator(
        std::span<const double>(indicator_values.data(), static_cast<std::size_t>(n)), scm.indicator);

    // Second pass: everything else follows the mechanisms of its row's context.
    std::map<int, std::vector<int>> orders;
    for (const auto& [r, a] : scm.per_context_coeff) orders[r] = topological_order(scm.context_graph_scm(r));
    for (int i = 0; i < n; ++i) {
        const int r = context[static_cast<std::size_t>(i)];
        const auto& a = scm.per_context_coeff.at(r);
        x(i, k) = r;
        for (int v : orders.at(r)) {
            if (upstream.count(v)) continue;
            double value = c(v) * eta(i, v);
            for (int j = 0; j < nodes; ++j)
                if (a(v, j) != 0.0) value += a(v, j) * x(i, j);
            x(i, v) = value;
        }
    }

    Eigen::MatrixXd system(n, scm.num_system());
    for (int v = 0; v < nodes; ++v)
        if (v != k) system.col(scm.graph_index(v)) = x.col(v);
    return Dataset(std::move(system), context);
}

GroundTruth ground_truth(const MultiContextScm& scm) {
    GroundTruth t;
    std::vector<DirectedMixedGraph> graphs;
    for (const auto& [r, a] : scm.per_context_coeff) {
        auto g = scm.context_graph(r);
        t.descriptive.emplace(r, g);
        t.physical.emplace(r, g);
        graphs.push_back(std::move(g));
    }
    t.union_graph = union_of_graphs(graphs);
    t.labeled_union = labeled_union(t.descriptive);
    return t;
}

AssumptionReport check_assumptions(const MultiContextScm& scm) {
    AssumptionReport rep;
    const int k = scm.base.indicator_index;
    rep.weak_context_acyclic = true;
    for (const auto& [r, a] : scm.per_context_coeff)
        rep.weak_context_acyclic = rep.weak_context_acyclic && is_acyclic(scm.context_graph_scm(r));
    const auto u = union_graph_scm(scm);
    rep.union_acyclic = is_acyclic(u);
    rep.cycles_are_flips = cycles_are_edge_flips(u);
    rep.strong_context_acyclic = rep.weak_context_acyclic && !reaches_indicator_through_cycle(u, k);

    rep.weak_context_sufficient = true;
    for (const auto& [r, a] : scm.per_context_coeff)
        for (const auto& [s, b] : scm.per_context_coeff) {
            if (s <= r) continue;
            for (int i = 0; i < scm.base.num_nodes(); ++i)
                if (a.row(i) != b.row(i) && !u.has_directed(k, i)) rep.weak_context_sufficient = false;
        }
    rep.causal_sufficient = (scm.base.noise_scale.array() > 0.0).all();
    return rep;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> row_major(const Eigen::MatrixXd& m) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
}

Eigen::MatrixXd from_row_major(const std::vector<double>& v, int n) {
    if (v.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
        throw std::invalid_argument("coefficient matrix has the wrong size");
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = v[static_cast<std::size_t>(i * n + j)];
    return m;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text << '\n';
}

}  // namespace

std::string scm_to_json(const MultiContextScm& scm) {
    nlohmann::json doc;
    doc["num_nodes"] = scm.base.num_nodes();
    doc["coeff"] = row_major(scm.base.coeff);
    doc["noise_scale"] = std::vector<double>(scm.base.noise_scale.data(),
                                             scm.base.noise_scale.data() + scm.base.noise_scale.size());
    doc["indicator_index"] = scm.base.indicator_index;
    doc["density"] = scm.base.density;
    doc["n_contexts"] = scm.indicator.n_contexts;
    doc["balance"] = scm.indicator.balance;
    doc["levels"] = scm.indicator.levels;
    nlohmann::json per_context = nlohmann::json::object();
    for (const auto& [r, a] : scm.per_context_coeff) per_context[std::to_string(r)] = row_major(a);
    doc["per_context_coeff"] = per_context;
    nlohmann::json children = nlohmann::json::object();
    for (const auto& [r, nodes] : scm.r_children)
        children[std::to_string(r)] = std::vector<int>(nodes.begin(), nodes.end());
    doc["r_children"] = children;
    nlohmann::json edits = nlohmann::json::array();
    for (const auto& e : scm.edits)
        edits.push_back({{"context", e.context}, {"op", to_string(e.op)}, {"target", e.target}, {"partner", e.partner}});
    doc["edits"] = edits;
    return doc.dump(2);
}

MultiContextScm scm_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        MultiContextScm scm;
        const int n = doc.at("num_nodes").get<int>();
        scm.base.coeff = from_row_major(doc.at("coeff").get<std::vector<double>>(), n);
        const auto noise = doc.at("noise_scale").get<std::vector<double>>();
        if (noise.size() != static_cast<std::size_t>(n)) throw std::invalid_argument("noise_scale has the wrong size");
        scm.base.noise_scale = Eigen::Map<const Eigen::VectorXd>(noise.data(), n);
        scm.base.indicator_index = doc.at("indicator_index").get<int>();
        scm.base.density = doc.value("density", 0.0);
        scm.indicator = IndicatorConfig::make(doc.at("n_contexts").get<int>(), doc.at("balance").get<double>());
        for (const auto& [key, value] : doc.at("per_context_coeff").items())
            scm.per_context_coeff[std::stoi(key)] = from_row_major(value.get<std::vector<double>>(), n);
        if (doc.contains("r_children"))
            for (const auto& [key, value] : doc.at("r_children").items())
                for (int c : value) scm.r_children[std::stoi(key)].insert(c);
        if (doc.contains("edits"))
            for (const auto& e : doc.at("edits"))
                scm.edits.push_back({e.at("context").get<int>(), edit_op_from_string(e.at("op").get<std::string>()),
                                     e.at("target").get<int>(), e.at("partner").get<int>()});
        return scm;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("invalid SCM JSON: ") + e.what());
    }
}

void write_scm(const std::filesystem::path& path, const MultiContextScm& scm) { write_text(path, scm_to_json(scm)); }

MultiContextScm read_scm(const std::filesystem::path& path) { return scm_from_json(read_text(path)); }

std::string ground_truth_to_json(const GroundTruth& truth) {
    nlohmann::json doc;
    nlohmann::json descriptive = nlohmann::json::object();
    nlohmann::json physical = nlohmann::json::object();
    for (const auto& [r, g] : truth.descriptive) descriptive[std::to_string(r)] = detail::graph_to_json_value(g);
    for (const auto& [r, g] : truth.physical) physical[std::to_string(r)] = detail::graph_to_json_value(g);
    doc["descriptive"] = descriptive;
    doc["physical"] = physical;
    doc["union"] = detail::graph_to_json_value(truth.union_graph);
    doc["labeled_union"] = detail::graph_to_json_value(truth.labeled_union);
    return doc.dump(2);
}

GroundTruth ground_truth_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        GroundTruth t;
        for (const auto& [key, value] : doc.at("descriptive").items())
            t.descriptive.emplace(std::stoi(key), detail::graph_from_json_value(value));
        if (doc.contains("physical"))
            for (const auto& [key, value] : doc.at("physical").items())
                t.physical.emplace(std::stoi(key), detail::graph_from_json_value(value));
        else
            t.physical = t.descriptive;
        t.union_graph = doc.contains("union") ? detail::graph_from_json_value(doc.at("union")) : [&] {
            std::vector<DirectedMixedGraph> graphs;
            for (const auto& [r, g] : t.descriptive) graphs.push_back(g);
            return union_of_graphs(graphs);
        }();
        t.labeled_union = doc.contains("labeled_union") ? detail::graph_from_json_value(doc.at("labeled_union"))
                                                        : labeled_union(t.descriptive);
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("invalid ground-truth JSON: ") + e.what());
    }
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth) {
    write_text(path, ground_truth_to_json(truth));
}

GroundTruth read_ground_truth(const std::filesystem::path& path) { return ground_truth_from_json(read_text(path)); }

}  // namespace ctxcd
