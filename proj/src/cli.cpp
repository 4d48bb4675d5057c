#include "mcgc/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mcgc/dataset_io.hpp"
#include "mcgc/errors.hpp"
#include "mcgc/model.hpp"
#include "mcgc/rng.hpp"
#include "mcgc/train.hpp"
#include "mcgc/tu_loader.hpp"
#include "mcgc/tx_ingest.hpp"

namespace mcgc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- shared flag bundles -------------------------------------------------

struct ModelFlags {
    std::size_t dim = 64;
    int layers = 3;
    int prop_steps = 3;
    std::string clusters; // "n1,n2,..." override; empty = derive from data
    double entropy_coeff = 1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--dim", dim, "Hidden feature width d")->capture_default_str();
        cmd->add_option("--layers", layers, "Pooling stage count L")->capture_default_str();
        cmd->add_option("--prop-steps", prop_steps, "Convolutions per block K")
            ->capture_default_str();
        cmd->add_option("--clusters", clusters,
                        "Comma-separated cluster schedule n1,n2,... (default: quartering)");
        cmd->add_option("--entropy-coeff", entropy_coeff,
                        "Assignment-entropy loss weight")
            ->capture_default_str();
    }

    PoolingConfig pooling() const {
        PoolingConfig pcfg;
        pcfg.layers = layers;
        pcfg.propagation_steps = prop_steps;
        pcfg.hidden_dim = dim;
        pcfg.entropy_coeff = entropy_coeff;
        if (!clusters.empty()) {
            std::stringstream in(clusters);
            std::string item;
            while (std::getline(in, item, ',')) {
                try {
                    pcfg.cluster_sizes.push_back(std::stoul(item));
                } catch (const std::exception&) {
                    throw ValidationError("--clusters: bad entry '" + item + "'");
                }
            }
        }
        return pcfg;
    }
};

struct TrainFlags {
    double lr = 0.01;
    int epochs = 100;
    int folds = 10;
    std::optional<std::uint64_t> seed_flag;
    std::string optimizer = "adam";

    void attach(CLI::App* cmd, bool with_folds) {
        cmd->add_option("--lr", lr, "Learning rate")->capture_default_str();
        cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
        if (with_folds)
            cmd->add_option("--folds", folds, "Cross-validation folds")
                ->capture_default_str();
        cmd->add_option("--seed", seed_flag, "RNG seed (falls back to $MCGC_SEED, then 0)");
        cmd->add_option("--optimizer", optimizer, "adam or sgd")
            ->check(CLI::IsMember({"adam", "sgd"}))
            ->capture_default_str();
    }

    std::uint64_t seed() const {
        if (seed_flag) return *seed_flag;
        if (const char* env = std::getenv("MCGC_SEED")) {
            try {
                return std::stoull(env);
            } catch (const std::exception&) {
                throw ValidationError(std::string("MCGC_SEED is not an integer: ") + env);
            }
        }
        return 0;
    }

    TrainConfig config() const {
        TrainConfig cfg;
        cfg.learning_rate = lr;
        cfg.epochs = epochs;
        cfg.folds = folds;
        cfg.seed = seed();
        cfg.optimizer = optimizer == "sgd" ? Optimizer::Sgd : Optimizer::Adam;
        return cfg;
    }
};

struct IngestFlags {
    int k_order = 4;
    std::string edge_weights = "binary";
    std::size_t node_cap = 1000;

    void attach(CLI::App* cmd) {
        cmd->add_option("--k-order", k_order, "Breadth-first ball radius K")
            ->capture_default_str();
        cmd->add_option("--edge-weights", edge_weights, "binary or log-amount")
            ->check(CLI::IsMember({"binary", "log-amount"}))
            ->capture_default_str();
        cmd->add_option("--node-cap", node_cap, "Maximum nodes per pattern graph")
            ->capture_default_str();
    }

    EdgeWeightMode mode() const {
        return edge_weights == "log-amount" ? EdgeWeightMode::LogAmount
                                            : EdgeWeightMode::Binary;
    }
};

// ---- run manifest ----------------------------------------------------------

/// Atomic write: a rename never leaves a half-written manifest behind.
void write_manifest(const std::string& path, const json& manifest) {
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot write manifest to " + tmp.string());
        out << manifest.dump(1) << '\n';
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot move manifest into place at " + path + ": " + ec.message());
}

json config_snapshot(const std::string& data_dir, const TrainFlags& train,
                     const ModelFlags& model, bool with_folds) {
    json cfg;
    cfg["data"] = data_dir;
    cfg["lr"] = train.lr;
    cfg["epochs"] = train.epochs;
    if (with_folds) cfg["folds"] = train.folds;
    cfg["seed"] = train.seed();
    cfg["optimizer"] = train.optimizer;
    cfg["dim"] = model.dim;
    cfg["layers"] = model.layers;
    cfg["prop_steps"] = model.prop_steps;
    cfg["clusters"] = model.clusters;
    cfg["entropy_coeff"] = model.entropy_coeff;
    return cfg;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---- target list -----------------------------------------------------------

/// Lines of "address,label"; an optional "address,label" header is skipped.
std::vector<std::pair<std::string, int>> read_targets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open target list: " + path);
    std::vector<std::pair<std::string, int>> targets;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line == "address,label") continue;
        const std::size_t comma = line.rfind(',');
        if (comma == std::string::npos || comma == 0)
            throw ValidationError(path + " line " + std::to_string(line_no) +
                                  ": expected 'address,label'");
        try {
            targets.emplace_back(line.substr(0, comma),
                                 std::stoi(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw ValidationError(path + " line " + std::to_string(line_no) +
                                  ": bad label '" + line.substr(comma + 1) + "'");
        }
    }
    if (targets.empty()) throw ValidationError(path + ": no targets listed");
    return targets;
}

void apply_jobs(int jobs) {
#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#else
    (void)jobs;
#endif
}

// ---- subcommand bodies -------------------------------------------------

int run_ingest(const std::string& csv, const std::string& targets_path,
               const std::string& out_dir, const std::string& name,
               const IngestFlags& ingest, const std::string& manifest_path) {
    Stopwatch clock;
    const ParseResult parsed = parse_tx_csv(csv);
    for (const std::string& err : parsed.row_errors) std::cerr << "skipped " << err << '\n';
    const auto targets = read_targets(targets_path);
    const GraphDataset ds = build_pattern_dataset(parsed.records, targets, ingest.k_order,
                                                  ingest.mode(), ingest.node_cap, name);
    save_dataset(ds, out_dir);

    std::cout << "parsed " << parsed.records.size() << " records ("
              << parsed.dropped_self_transfers << " self-transfers dropped, "
              << parsed.skipped_rows << " rows skipped)\n"
              << "wrote " << ds.graphs.size() << " pattern graphs to " << out_dir << '\n';

    json manifest;
    manifest["command"] = "ingest";
    manifest["config"] = {{"csv", csv},         {"targets", targets_path},
                          {"out", out_dir},     {"name", name},
                          {"k_order", ingest.k_order}, {"edge_weights", ingest.edge_weights},
                          {"node_cap", ingest.node_cap}};
    manifest["seed"] = nullptr;
    manifest["dataset_fingerprint"] = dataset_fingerprint_hex(ds);
    manifest["artifacts"] = {out_dir};
    manifest["wall_clock_seconds"] = clock.seconds();
    write_manifest(manifest_path, manifest);
    return 0;
}

int run_synth(std::uint64_t seed, std::size_t n_phishing, std::size_t n_normal,
              const std::string& out_dir, const std::string& name,
              const IngestFlags& ingest, const std::string& manifest_path) {
    Stopwatch clock;
    const SynthCorpus corpus = synth_tx_corpus(seed, n_phishing, n_normal);
    const GraphDataset ds = build_pattern_dataset(corpus.records, corpus.targets,
                                                  ingest.k_order, ingest.mode(),
                                                  ingest.node_cap, name);
    save_dataset(ds, out_dir);
    std::cout << "generated " << corpus.records.size() << " records, "
              << ds.graphs.size() << " pattern graphs -> " << out_dir << '\n';

    json manifest;
    manifest["command"] = "synth";
    manifest["config"] = {{"seed", seed},
                          {"n_phishing", n_phishing},
                          {"n_normal", n_normal},
                          {"out", out_dir},
                          {"name", name},
                          {"k_order", ingest.k_order},
                          {"edge_weights", ingest.edge_weights},
                          {"node_cap", ingest.node_cap}};
    manifest["seed"] = seed;
    manifest["dataset_fingerprint"] = dataset_fingerprint_hex(ds);
    manifest["artifacts"] = {out_dir};
    manifest["wall_clock_seconds"] = clock.seconds();
    write_manifest(manifest_path, manifest);
    return 0;
}

int run_train(const std::string& data_dir, const std::string& checkpoint_path,
              const TrainFlags& tflags, const ModelFlags& mflags,
              const std::string& metrics_path, const std::string& curves_path,
              int jobs, const std::string& manifest_path) {
    Stopwatch clock;
    apply_jobs(jobs);
    const GraphDataset ds = load_dataset(data_dir);
    const TrainConfig cfg = tflags.config();
    const PoolingConfig resolved = resolve_config(mflags.pooling(), ds);

    const TrainResult result = train(ds, cfg, resolved);

    Checkpoint ckpt;
    ckpt.config = resolved;
    ckpt.input_dim = ds.graphs[0].feature_dim();
    ckpt.num_classes = static_cast<std::size_t>(ds.num_classes);
    ckpt.params = result.params;
    save_checkpoint(checkpoint_path, ckpt);

    std::cout << metrics_table(result.metrics);
    std::cout << "checkpoint -> " << checkpoint_path << '\n';
    std::vector<std::string> artifacts = {checkpoint_path};
    if (!metrics_path.empty()) {
        write_metrics_json(result.metrics, metrics_path);
        artifacts.push_back(metrics_path);
    }
    if (!curves_path.empty()) {
        write_epoch_csv(result.metrics, curves_path);
        artifacts.push_back(curves_path);
    }

    json manifest;
    manifest["command"] = "train";
    manifest["config"] = config_snapshot(data_dir, tflags, mflags, false);
    manifest["seed"] = cfg.seed;
    manifest["dataset_fingerprint"] = dataset_fingerprint_hex(ds);
    manifest["artifacts"] = artifacts;
    manifest["wall_clock_seconds"] = clock.seconds();
    write_manifest(manifest_path, manifest);
    return 0;
}

int run_cv(const std::string& data_dir, const TrainFlags& tflags, const ModelFlags& mflags,
           const std::string& metrics_path, const std::string& curves_path, int jobs,
           const std::string& manifest_path, const std::string& expect_fingerprint) {
    Stopwatch clock;
    apply_jobs(jobs);
    const GraphDataset ds = load_dataset(data_dir);
    const std::string fingerprint = dataset_fingerprint_hex(ds);
    if (!expect_fingerprint.empty() && fingerprint != expect_fingerprint)
        throw ValidationError("dataset at " + data_dir + " has fingerprint " + fingerprint +
                              " but the manifest recorded " + expect_fingerprint);

    const TrainConfig cfg = tflags.config();
    const Metrics metrics = kfold_cv(ds, cfg, mflags.pooling());

    std::cout << metrics_table(metrics);
    std::vector<std::string> artifacts;
    if (!metrics_path.empty()) {
        write_metrics_json(metrics, metrics_path);
        artifacts.push_back(metrics_path);
    }
    if (!curves_path.empty()) {
        write_epoch_csv(metrics, curves_path);
        artifacts.push_back(curves_path);
    }

    json manifest;
    manifest["command"] = "cv";
    manifest["config"] = config_snapshot(data_dir, tflags, mflags, true);
    manifest["seed"] = cfg.seed;
    manifest["dataset_fingerprint"] = fingerprint;
    manifest["artifacts"] = artifacts;
    manifest["wall_clock_seconds"] = clock.seconds();
    write_manifest(manifest_path, manifest);
    return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& data_dir,
             const std::string& metrics_path, const std::string& manifest_path) {
    Stopwatch clock;
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const GraphDataset ds = load_dataset(data_dir);
    if (ds.graphs[0].feature_dim() != ckpt.input_dim)
        throw ValidationError("dataset feature width " +
                              std::to_string(ds.graphs[0].feature_dim()) +
                              " does not match checkpoint input dim " +
                              std::to_string(ckpt.input_dim));
    if (static_cast<std::size_t>(ds.num_classes) != ckpt.num_classes)
        throw ValidationError("dataset has " + std::to_string(ds.num_classes) +
                              " classes but the checkpoint was trained for " +
                              std::to_string(ckpt.num_classes));

    std::vector<int> predictions, truth;
    for (const Graph& g : ds.graphs) {
        predictions.push_back(predict_label(forward(g, ckpt.params, ckpt.config)));
        truth.push_back(g.label);
    }
    const double accuracy = evaluate_accuracy(predictions, truth);
    std::cout << "accuracy " << accuracy << " over " << ds.graphs.size() << " graphs\n";

    std::vector<std::string> artifacts;
    if (!metrics_path.empty()) {
        json jm;
        jm["accuracy"] = accuracy;
        jm["num_graphs"] = ds.graphs.size();
        std::ofstream out(metrics_path);
        if (!out) throw IoError("cannot write metrics to " + metrics_path);
        out << jm.dump(1) << '\n';
        artifacts.push_back(metrics_path);
    }

    json manifest;
    manifest["command"] = "eval";
    manifest["config"] = {{"checkpoint", checkpoint_path}, {"data", data_dir}};
    manifest["seed"] = nullptr;
    manifest["dataset_fingerprint"] = dataset_fingerprint_hex(ds);
    manifest["artifacts"] = artifacts;
    manifest["wall_clock_seconds"] = clock.seconds();
    write_manifest(manifest_path, manifest);
    return 0;
}

int run_gradcheck(std::uint64_t seed, int graphs, std::size_t dim, int layers, double eps,
                  double tol) {
    rng::Engine eng(seed);
    double worst = 0.0;
    for (int i = 0; i < graphs; ++i) {
        const std::size_t n = 4 + rng::uniform_index(eng, 9); // 4..12 nodes
        Graph g;
        g.adjacency.assign(n, n);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = r + 1; c < n; ++c)
                if (rng::uniform01(eng) < 0.4) g.adjacency(r, c) = g.adjacency(c, r) = 1.0;
        g.features.assign(n, 4);
        for (std::size_t k = 0; k < g.features.size(); ++k)
            g.features.data()[k] = rng::uniform(eng, -1.0, 1.0);
        g.label = static_cast<int>(rng::uniform_index(eng, 2));

        PoolingConfig pcfg;
        pcfg.layers = layers;
        pcfg.propagation_steps = 3;
        pcfg.hidden_dim = dim;
        pcfg.cluster_sizes = default_cluster_sizes(n, layers);

        ParamStore params = make_model_params(pcfg, 4, 2);
        params.init_uniform_glorot(seed + static_cast<std::uint64_t>(i));

        const ParamStore analytic = param_gradients(g, params, pcfg);
        const ParamStore numeric = finite_diff_grad(
            [&](const ParamStore& p) { return graph_loss(g, p, pcfg); }, params, eps);
        worst = std::max(worst, max_relative_error(analytic, numeric));
    }
    std::cout << "max relative error: " << worst << " over " << graphs << " graphs\n";
    if (worst < tol) {
        std::cout << "gradcheck passed (tolerance " << tol << ")\n";
        return 0;
    }
    std::cerr << "gradcheck FAILED (tolerance " << tol << ")\n";
    return 1;
}

int run_stats(const std::string& data_dir, const std::string& tu_name,
              std::optional<std::size_t> expect_graphs, std::optional<int> expect_classes,
              std::optional<double> expect_mean_nodes, std::optional<double> expect_mean_edges,
              double tol_nodes, double tol_edges) {
    const GraphDataset ds = tu_name.empty() ? load_dataset(data_dir)
                                            : load_tu_dataset(data_dir, tu_name);
    const DatasetStats stats = dataset_stats(ds);
    std::cout << "graphs " << stats.num_graphs << "\nclasses " << stats.num_classes
              << "\nmean_nodes " << stats.mean_nodes << "\nmean_edges " << stats.mean_edges
              << '\n';

    std::vector<std::string> failures;
    if (expect_graphs && stats.num_graphs != *expect_graphs)
        failures.push_back("graphs: expected " + std::to_string(*expect_graphs) + ", got " +
                           std::to_string(stats.num_graphs));
    if (expect_classes && stats.num_classes != *expect_classes)
        failures.push_back("classes: expected " + std::to_string(*expect_classes) +
                           ", got " + std::to_string(stats.num_classes));
    if (expect_mean_nodes && std::abs(stats.mean_nodes - *expect_mean_nodes) > tol_nodes)
        failures.push_back("mean_nodes: expected " + std::to_string(*expect_mean_nodes) +
                           " +- " + std::to_string(tol_nodes) + ", got " +
                           std::to_string(stats.mean_nodes));
    if (expect_mean_edges && std::abs(stats.mean_edges - *expect_mean_edges) > tol_edges)
        failures.push_back("mean_edges: expected " + std::to_string(*expect_mean_edges) +
                           " +- " + std::to_string(tol_edges) + ", got " +
                           std::to_string(stats.mean_edges));
    for (const std::string& f : failures) std::cerr << "mismatch — " << f << '\n';
    return failures.empty() ? 0 : 1;
}

} // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"Transaction pattern-graph classifier: ingest, train, validate."};
    app.name("mcgc");
    app.require_subcommand(1);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "CSV + target list -> dataset directory");
    std::string ingest_csv, ingest_targets, ingest_out, ingest_name = "ingest";
    std::string ingest_manifest = "run_manifest.json";
    IngestFlags ingest_flags;
    ingest_cmd->add_option("--csv", ingest_csv, "Transaction CSV")->required();
    ingest_cmd->add_option("--targets", ingest_targets, "Target list (address,label lines)")
        ->required();
    ingest_cmd->add_option("--out", ingest_out, "Output dataset directory")->required();
    ingest_cmd->add_option("--name", ingest_name, "Dataset name")->capture_default_str();
    ingest_flags.attach(ingest_cmd);
    ingest_cmd->add_option("--manifest", ingest_manifest, "Run manifest path")
        ->capture_default_str();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
    std::string synth_out, synth_name = "synth", synth_manifest = "run_manifest.json";
    std::optional<std::uint64_t> synth_seed;
    std::size_t n_phishing = 100, n_normal = 100;
    IngestFlags synth_flags;
    synth_cmd->add_option("--out", synth_out, "Output dataset directory")->required();
    synth_cmd->add_option("--seed", synth_seed, "RNG seed (falls back to $MCGC_SEED, then 0)");
    synth_cmd->add_option("--n-phishing", n_phishing, "Phishing target count")
        ->capture_default_str();
    synth_cmd->add_option("--n-normal", n_normal, "Normal target count")
        ->capture_default_str();
    synth_cmd->add_option("--name", synth_name, "Dataset name")->capture_default_str();
    synth_flags.attach(synth_cmd);
    synth_cmd->add_option("--manifest", synth_manifest, "Run manifest path")
        ->capture_default_str();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train on a dataset directory");
    std::string train_data, train_ckpt = "model.ckpt", train_metrics, train_curves;
    std::string train_manifest = "run_manifest.json";
    int train_jobs = 0;
    TrainFlags train_tflags;
    ModelFlags train_mflags;
    train_cmd->add_option("--data", train_data, "Dataset directory")->required();
    train_cmd->add_option("--out", train_ckpt, "Checkpoint output path")
        ->capture_default_str();
    train_tflags.attach(train_cmd, false);
    train_mflags.attach(train_cmd);
    train_cmd->add_option("--metrics", train_metrics, "Metrics JSON output path");
    train_cmd->add_option("--curves", train_curves, "Per-epoch CSV output path");
    train_cmd->add_option("--jobs", train_jobs, "Compute thread budget (0 = default)")
        ->capture_default_str();
    train_cmd->add_option("--manifest", train_manifest, "Run manifest path")
        ->capture_default_str();

    // cv
    auto* cv_cmd = app.add_subcommand("cv", "Stratified k-fold cross-validation");
    std::string cv_data, cv_metrics, cv_curves, cv_manifest = "run_manifest.json";
    std::string cv_from_manifest;
    int cv_jobs = 0;
    TrainFlags cv_tflags;
    ModelFlags cv_mflags;
    cv_cmd->add_option("--data", cv_data, "Dataset directory");
    cv_tflags.attach(cv_cmd, true);
    cv_mflags.attach(cv_cmd);
    cv_cmd->add_option("--metrics", cv_metrics, "Metrics JSON output path");
    cv_cmd->add_option("--curves", cv_curves, "Per-epoch CSV output path");
    cv_cmd->add_option("--jobs", cv_jobs, "Compute thread budget (0 = default)")
        ->capture_default_str();
    cv_cmd->add_option("--manifest", cv_manifest, "Run manifest path")
        ->capture_default_str();
    cv_cmd->add_option("--from-manifest", cv_from_manifest,
                       "Rerun the configuration recorded in an earlier manifest");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Checkpoint + dataset -> accuracy");
    std::string eval_ckpt, eval_data, eval_metrics, eval_manifest = "run_manifest.json";
    eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint path")->required();
    eval_cmd->add_option("--data", eval_data, "Dataset directory")->required();
    eval_cmd->add_option("--metrics", eval_metrics, "Metrics JSON output path");
    eval_cmd->add_option("--manifest", eval_manifest, "Run manifest path")
        ->capture_default_str();

    // gradcheck
    auto* grad_cmd = app.add_subcommand(
        "gradcheck", "Verify analytic gradients against finite differences");
    std::uint64_t grad_seed = 7;
    int grad_graphs = 20, grad_layers = 2;
    std::size_t grad_dim = 4;
    double grad_eps = 1e-5, grad_tol = 1e-4;
    grad_cmd->add_option("--seed", grad_seed, "RNG seed")->capture_default_str();
    grad_cmd->add_option("--graphs", grad_graphs, "Random graph count")
        ->capture_default_str();
    grad_cmd->add_option("--dim", grad_dim, "Hidden feature width")->capture_default_str();
    grad_cmd->add_option("--layers", grad_layers, "Pooling stage count")
        ->capture_default_str();
    grad_cmd->add_option("--eps", grad_eps, "Finite-difference step")->capture_default_str();
    grad_cmd->add_option("--tol", grad_tol, "Max relative error to pass")
        ->capture_default_str();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics vs expectations");
    std::string stats_data, stats_tu;
    std::optional<std::size_t> expect_graphs;
    std::optional<int> expect_classes;
    std::optional<double> expect_mean_nodes, expect_mean_edges;
    double tol_nodes = 0.01, tol_edges = 0.5;
    stats_cmd->add_option("--data", stats_data, "Dataset directory")->required();
    stats_cmd->add_option("--tu", stats_tu,
                          "Treat --data as a TU-format directory with this dataset name");
    stats_cmd->add_option("--expect-graphs", expect_graphs, "Expected graph count");
    stats_cmd->add_option("--expect-classes", expect_classes, "Expected class count");
    stats_cmd->add_option("--expect-mean-nodes", expect_mean_nodes, "Expected mean nodes");
    stats_cmd->add_option("--expect-mean-edges", expect_mean_edges, "Expected mean edges");
    stats_cmd->add_option("--tol-mean-nodes", tol_nodes, "Mean-node tolerance")
        ->capture_default_str();
    stats_cmd->add_option("--tol-mean-edges", tol_edges, "Mean-edge tolerance")
        ->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (ingest_cmd->parsed())
            return run_ingest(ingest_csv, ingest_targets, ingest_out, ingest_name,
                              ingest_flags, ingest_manifest);
        if (synth_cmd->parsed()) {
            std::uint64_t seed = 0;
            if (synth_seed) {
                seed = *synth_seed;
            } else if (const char* env = std::getenv("MCGC_SEED")) {
                try {
                    seed = std::stoull(env);
                } catch (const std::exception&) {
                    throw ValidationError(std::string("MCGC_SEED is not an integer: ") + env);
                }
            }
            return run_synth(seed, n_phishing, n_normal, synth_out, synth_name, synth_flags,
                             synth_manifest);
        }
        if (train_cmd->parsed())
            return run_train(train_data, train_ckpt, train_tflags, train_mflags,
                             train_metrics, train_curves, train_jobs, train_manifest);
        if (cv_cmd->parsed()) {
            std::string expect_fingerprint;
            if (!cv_from_manifest.empty()) {
                std::ifstream in(cv_from_manifest);
                if (!in) throw IoError("cannot open manifest: " + cv_from_manifest);
                json m;
                try {
                    in >> m;
                } catch (const json::exception& e) {
                    throw IoError("malformed manifest " + cv_from_manifest + ": " + e.what());
                }
                if (!m.contains("command") || m["command"] != "cv")
                    throw ValidationError(cv_from_manifest + " is not a cv manifest");
                const json& cfg = m.at("config");
                cv_data = cfg.at("data").get<std::string>();
                cv_tflags.lr = cfg.at("lr").get<double>();
                cv_tflags.epochs = cfg.at("epochs").get<int>();
                cv_tflags.folds = cfg.at("folds").get<int>();
                cv_tflags.seed_flag = cfg.at("seed").get<std::uint64_t>();
                cv_tflags.optimizer = cfg.at("optimizer").get<std::string>();
                cv_mflags.dim = cfg.at("dim").get<std::size_t>();
                cv_mflags.layers = cfg.at("layers").get<int>();
                cv_mflags.prop_steps = cfg.at("prop_steps").get<int>();
                cv_mflags.clusters = cfg.at("clusters").get<std::string>();
                cv_mflags.entropy_coeff = cfg.at("entropy_coeff").get<double>();
                expect_fingerprint = m.at("dataset_fingerprint").get<std::string>();
            }
            if (cv_data.empty())
                throw ValidationError("cv: need --data or --from-manifest");
            return run_cv(cv_data, cv_tflags, cv_mflags, cv_metrics, cv_curves, cv_jobs,
                          cv_manifest, expect_fingerprint);
        }
        if (eval_cmd->parsed())
            return run_eval(eval_ckpt, eval_data, eval_metrics, eval_manifest);
        if (grad_cmd->parsed())
            return run_gradcheck(grad_seed, grad_graphs, grad_dim, grad_layers, grad_eps,
                                 grad_tol);
        if (stats_cmd->parsed())
            return run_stats(stats_data, stats_tu, expect_graphs, expect_classes,
                             expect_mean_nodes, expect_mean_edges, tol_nodes, tol_edges);
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << "error: no subcommand\n" << app.help();
    return 1;
}

} // namespace mcgc
