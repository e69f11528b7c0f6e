#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctxcd/citest.hpp"
#include "ctxcd/dataset.hpp"
#include "ctxcd/discovery.hpp"
#include "ctxcd/experiment.hpp"
#include "ctxcd/fixtures.hpp"
#include "ctxcd/graph_io.hpp"
#include "ctxcd/metrics.hpp"
#include "ctxcd/scm.hpp"

namespace fs = std::filesystem;
using namespace ctxcd;

namespace {

struct GenerateArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    int n = 1000;
    std::string fixture;
    std::string out = "generated";
};

struct DiscoverArgs {
    std::string data;
    std::string method = "ac";
    double alpha = 0.05;
    std::string cit = "parcorr-mixed";
    std::string links = "none";
    std::string ground_truth;
    int max_sepset = -1;
    std::string out = "discovered";
};

struct ExperimentArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
    unsigned threads = 0;
};

struct EvalArgs {
    std::string pred;
    std::string truth;
    std::string scope = "include-r";
    std::string graph = "union";
};

struct ReplayArgs {
    std::string dir;
    int trial = 0;
};

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    auto cfg = path.empty() ? ExperimentConfig{} : read_config(path);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

int run_generate(const GenerateArgs& a) {
    MultiContextScm scm;
    if (a.fixture == "endogenous-selection") {
        scm = endogenous_selection_scm();
    } else if (!a.fixture.empty()) {
        throw std::invalid_argument("unknown fixture '" + a.fixture + "'");
    } else {
        const auto cfg = load_config(a.config, a.overrides);
        cfg.validate();
        auto rng = make_rng(a.seed);
        scm = generate_scm(cfg.generator(), rng);
    }
    fs::create_directories(a.out);
    auto rng = make_rng(derive_seed(a.seed, static_cast<std::uint64_t>(a.n)));
    write_scm(fs::path(a.out) / "scm.json", scm);
    write_ground_truth(fs::path(a.out) / "truth.json", ground_truth(scm));
    write_dataset_csv(fs::path(a.out) / "data.csv", sample(scm, a.n, rng));
    std::cout << "wrote scm.json, truth.json and data.csv (n=" << a.n << ") to " << a.out << '\n';
    return 0;
}

int run_discover(const DiscoverArgs& a) {
    DiscoveryConfig cfg;
    cfg.alpha = a.alpha;
    cfg.method = method_from_string(a.method);
    if (a.max_sepset >= 0) cfg.max_sepset_size = a.max_sepset;
    const auto mode = cit_mode_from_string(a.cit);
    const auto links = link_mode_from_string(a.links);

    std::optional<GroundTruth> truth;
    if (!a.ground_truth.empty()) truth = read_ground_truth(a.ground_truth);
    if ((mode == CitMode::Oracle || links != LinkMode::None) && !truth)
        throw std::invalid_argument("--ground-truth is required for the oracle engine and for link assumptions");
    if (truth) cfg.links = LinkAssumptions::from_graph(links, truth->union_graph);

    std::optional<Dataset> data;
    std::optional<CiDispatcher> cit;
    if (mode == CitMode::Oracle) {
        const int d = static_cast<int>(truth->union_graph.num_nodes()) - 1;
        cit.emplace(CiDispatcher::oracle({truth->descriptive, truth->union_graph}, d));
    } else {
        if (a.data.empty()) throw std::invalid_argument("--data is required for the parcorr-mixed engine");
        data.emplace(read_dataset_csv(a.data));
        cit.emplace(CiDispatcher::finite_sample(*data));
    }

    const auto start = std::chrono::steady_clock::now();
    const auto res = discover(*cit, cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path out(a.out);
    fs::create_directories(out);
    for (const auto& [r, g] : res.context_graphs) write_graph(out / ("graph_r" + std::to_string(r) + ".json"), g);
    write_graph(out / "union.json", res.union_graph);
    write_graph(out / "labeled_union.json", res.labeled_union);
    std::ofstream seps(out / "sepsets.csv");
    write_sepsets_csv(seps, res);
    nlohmann::json stats{{"method", to_string(res.method)}, {"test_count", res.test_count}, {"runtime_seconds", seconds}};
    write_text(out / "stats.json", stats.dump(2) + '\n');
    std::cout << to_string(res.method) << ": " << res.test_count << " tests, union has "
              << res.union_graph.skeleton().size() << " adjacencies; outputs in " << a.out << '\n';
    return 0;
}

int run_experiment_cmd(const ExperimentArgs& a) {
    auto cfg = load_config(a.config, a.overrides);
    if (!a.out.empty()) cfg.out_dir = a.out;
    const auto start = std::chrono::steady_clock::now();
    const auto summary = run_experiment(cfg, a.threads);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d trials (%d failed generations) in %.1fs; results in %s\n", cfg.trials, summary.failed, seconds,
                cfg.out_dir.c_str());
    return 0;
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

/// A plain graph file, or a ground-truth file from which `which` picks the
/// union graph or the descriptive graph of one context.
DirectedMixedGraph read_truth_graph(const std::string& path, const std::string& which) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    const auto j = nlohmann::json::parse(in);
    if (j.contains("nodes")) return graph_from_json(j.dump());
    const auto truth = ground_truth_from_json(j.dump());
    if (which == "union") return truth.union_graph;
    const int r = std::stoi(which);
    const auto it = truth.descriptive.find(r);
    if (it == truth.descriptive.end()) throw std::invalid_argument("no context " + which + " in " + path);
    return it->second;
}

int run_eval(const EvalArgs& a) {
    const auto pred = read_graph(a.pred);
    const auto truth = read_truth_graph(a.truth, a.graph);
    Scope scope;
    if (a.scope == "include-r") scope = Scope::IncludeR;
    else if (a.scope == "system-only") scope = Scope::SystemOnly;
    else throw std::invalid_argument("unknown scope '" + a.scope + "'");
    const auto sk = skeleton_metrics(pred, truth, scope);
    const auto em = edgemark_metrics(pred, truth, scope);
    nlohmann::json out{{"scope", to_string(scope)},
                       {"tpr", optional_json(sk.tpr)},
                       {"fpr", optional_json(sk.fpr)},
                       {"true_edges", sk.true_edges},
                       {"found_edges", sk.found_edges},
                       {"em_precision", optional_json(em.precision)},
                       {"em_recall", optional_json(em.recall)}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int run_replay(const ReplayArgs& a) {
    const auto res = replay(a.dir, a.trial);
    std::cout << metrics_csv_header() << '\n';
    for (const auto& row : res.trial.rows) std::cout << metrics_csv_row(row) << '\n';
    std::cerr << "trial " << a.trial << (res.matches ? " matches" : " DIFFERS FROM") << " the recorded metrics\n";
    return res.matches ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal discovery of context-specific graphs with an endogenous context indicator"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Generate a multi-context SCM, its ground truth and a dataset");
    g->add_option("--config", gen.config, "Experiment config supplying the generator keys");
    g->add_option("--set", gen.overrides, "Config override key=value (repeatable)");
    g->add_option("--seed", gen.seed, "Generator seed");
    g->add_option("-n,--samples", gen.n, "Number of samples")->check(CLI::PositiveNumber);
    g->add_option("--fixture", gen.fixture, "Use a built-in SCM instead (endogenous-selection)");
    g->add_option("--out", gen.out, "Output directory");

    DiscoverArgs dis;
    auto* d = app.add_subcommand("discover", "Run one discovery method");
    d->add_option("--data", dis.data, "Dataset CSV (X1..XD,R)");
    d->add_option("--method", dis.method, "ac, masked, pooled or baseline");
    d->add_option("--alpha", dis.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    d->add_option("--cit", dis.cit, "oracle or parcorr-mixed");
    d->add_option("--link-assumptions", dis.links, "none, r-children or r-all");
    d->add_option("--ground-truth", dis.ground_truth, "Ground-truth JSON (oracle engine, link assumptions)");
    d->add_option("--max-sepset", dis.max_sepset, "Largest separating set size (default unbounded)");
    d->add_option("--out", dis.out, "Output directory");

    ExperimentArgs exp;
    auto* e = app.add_subcommand("experiment", "Run a seeded experiment grid");
    e->add_option("--config", exp.config, "Config file (key = value)");
    e->add_option("--set", exp.overrides, "Config override key=value (repeatable)");
    e->add_option("--out", exp.out, "Output directory (overrides out_dir)");
    e->add_option("--threads", exp.threads, "Worker threads (0 = all cores)");

    EvalArgs ev;
    auto* v = app.add_subcommand("eval", "Compare a graph against ground truth");
    v->add_option("--pred", ev.pred, "Predicted graph JSON")->required();
    v->add_option("--truth", ev.truth, "Graph JSON or ground-truth JSON")->required();
    v->add_option("--scope", ev.scope, "include-r or system-only");
    v->add_option("--graph", ev.graph, "Ground-truth graph to compare: union or a context value");

    ReplayArgs rep;
    auto* r = app.add_subcommand("replay", "Re-run one trial of a finished experiment");
    r->add_option("--dir", rep.dir, "Results directory")->required();
    r->add_option("--trial", rep.trial, "Trial id")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (g->parsed()) return run_generate(gen);
        if (d->parsed()) return run_discover(dis);
        if (e->parsed()) return run_experiment_cmd(exp);
        if (v->parsed()) return run_eval(ev);
        if (r->parsed()) return run_replay(rep);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 2;
    }
    return 1;
}
