#include "mcgc/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "mcgc/errors.hpp"
#include "mcgc/rng.hpp"

namespace mcgc {

void TrainConfig::validate() const {
    if (!std::isfinite(learning_rate) || learning_rate < 0.0)
        throw ValidationError("train config: learning_rate must be finite and >= 0");
    if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
    if (folds < 2) throw ValidationError("train config: folds must be >= 2");
}

void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state,
               double learning_rate) {
    if (state.m.num_tensors() == 0) {
        state.m = params.zeros_like();
        state.v = params.zeros_like();
        state.step = 0;
    }
    state.step += 1;
    const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
    for (auto& [name, p] : params) {
        const Matrix& g = grads.at(name);
        Matrix& m = state.m.at(name);
        Matrix& v = state.v.at(name);
        if (!p.same_shape(g))
            throw ValidationError("adam: gradient shape differs for '" + name + "'");
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g.data()[i];
            m.data()[i] = kAdamBeta1 * m.data()[i] + (1.0 - kAdamBeta1) * gi;
            v.data()[i] = kAdamBeta2 * v.data()[i] + (1.0 - kAdamBeta2) * gi * gi;
            const double m_hat = m.data()[i] / bias1;
            const double v_hat = v.data()[i] / bias2;
            p.data()[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
        }
    }
}

void sgd_step(ParamStore& params, const ParamStore& grads, double learning_rate) {
    for (auto& [name, p] : params) {
        const Matrix& g = grads.at(name);
        if (!p.same_shape(g))
            throw ValidationError("sgd: gradient shape differs for '" + name + "'");
        for (std::size_t i = 0; i < p.size(); ++i)
            p.data()[i] -= learning_rate * g.data()[i];
    }
}

double evaluate_accuracy(const std::vector<int>& predictions,
                         const std::vector<int>& truth) {
    if (predictions.empty()) throw ValidationError("accuracy: empty label lists");
    if (predictions.size() != truth.size())
        throw ValidationError("accuracy: " + std::to_string(predictions.size()) +
                              " predictions vs " + std::to_string(truth.size()) +
                              " truth labels");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == truth[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

PoolingConfig resolve_config(const PoolingConfig& pcfg, const GraphDataset& ds) {
    validate_dataset(ds);
    const std::size_t width = ds.graphs[0].feature_dim();
    std::size_t max_nodes = 0;
    for (const Graph& g : ds.graphs) {
        if (g.feature_dim() != width)
            throw ValidationError("dataset: feature width " +
                                  std::to_string(g.feature_dim()) + " differs from " +
                                  std::to_string(width));
        max_nodes = std::max(max_nodes, g.num_nodes());
    }
    PoolingConfig resolved = pcfg;
    if (resolved.cluster_sizes.empty())
        resolved.cluster_sizes = default_cluster_sizes(max_nodes, resolved.layers);
    resolved.validate();
    return resolved;
}

int predict_label(const Matrix& probs) {
    if (probs.rows() != 1 || probs.cols() == 0)
        throw ValidationError("predict: expected a 1 x num_classes row");
    std::size_t best = 0;
    for (std::size_t j = 1; j < probs.cols(); ++j)
        if (probs(0, j) > probs(0, best)) best = j;
    return static_cast<int>(best);
}

TrainResult train(const GraphDataset& ds, const TrainConfig& cfg,
                  const PoolingConfig& pcfg) {
    cfg.validate();
    const PoolingConfig resolved = resolve_config(pcfg, ds);
    const std::size_t input_dim = ds.graphs[0].feature_dim();
    const std::size_t num_classes = static_cast<std::size_t>(ds.num_classes);

    TrainResult result;
    result.params = make_model_params(resolved, input_dim, num_classes);
    result.params.init_uniform_glorot(cfg.seed);

    // Shuffle stream decoupled from the init stream by a fixed tag.
    rng::Engine order_eng(cfg.seed ^ 0x8f1bbcdc31a2c95bULL);

    ParamStore grads = result.params.zeros_like();
    AdamState adam;
    std::vector<std::size_t> order(ds.graphs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        rng::shuffle(order, order_eng);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            const std::size_t idx = order[pos];
            const Graph& g = ds.graphs[idx];
            for (auto& [name, gmat] : grads) gmat.fill(0.0);

            Matrix probs;
            double loss = 0.0;
            try {
                loss = loss_and_gradients(g, result.params, resolved, grads, &probs);
            } catch (const NumericError& e) {
                throw TrainingError("diverged at epoch " + std::to_string(epoch) +
                                    ", graph " + std::to_string(idx) + ": " + e.what());
            }
            if (!std::isfinite(loss))
                throw TrainingError("diverged at epoch " + std::to_string(epoch) +
                                    ", graph " + std::to_string(idx) +
                                    ": non-finite loss");
            loss_sum += loss;
            if (predict_label(probs) == g.label) ++correct;

            if (cfg.optimizer == Optimizer::Adam)
                adam_step(result.params, grads, adam, cfg.learning_rate);
            else
                sgd_step(result.params, grads, cfg.learning_rate);
        }

        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(ds.graphs.size());
        stats.train_accuracy =
            static_cast<double>(correct) / static_cast<double>(ds.graphs.size());
        stats.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.metrics.epochs.push_back(stats);
    }
    return result;
}

std::vector<int> stratified_folds(const GraphDataset& ds, int folds,
                                  std::uint64_t seed) {
    validate_dataset(ds);
    if (folds < 2) throw ValidationError("folds: need at least 2");
    if (ds.graphs.size() < static_cast<std::size_t>(folds))
        throw ValidationError("folds: dataset has " + std::to_string(ds.graphs.size()) +
                              " graphs, fewer than " + std::to_string(folds) + " folds");

    rng::Engine eng(seed);
    std::vector<int> fold_of(ds.graphs.size(), -1);
    std::size_t counter = 0;
    for (int c = 0; c < ds.num_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.graphs.size(); ++i)
            if (ds.graphs[i].label == c) members.push_back(i);
        rng::shuffle(members, eng);
        // Global round-robin counter balances fold sizes across classes.
        for (const std::size_t idx : members) {
            fold_of[idx] = static_cast<int>(counter % static_cast<std::size_t>(folds));
            ++counter;
        }
    }
    return fold_of;
}

Metrics kfold_cv(const GraphDataset& ds, const TrainConfig& cfg,
                 const PoolingConfig& pcfg) {
    cfg.validate();
    const PoolingConfig resolved = resolve_config(pcfg, ds); // shared architecture
    const std::vector<int> fold_of = stratified_folds(ds, cfg.folds, cfg.seed);

    Metrics metrics;

    // Class coverage: every fold's training split should see every class.
    std::vector<std::size_t> class_count(static_cast<std::size_t>(ds.num_classes), 0);
    for (const Graph& g : ds.graphs) ++class_count[static_cast<std::size_t>(g.label)];
    for (int f = 0; f < cfg.folds; ++f) {
        std::vector<std::size_t> in_fold(static_cast<std::size_t>(ds.num_classes), 0);
        for (std::size_t i = 0; i < ds.graphs.size(); ++i)
            if (fold_of[i] == f) ++in_fold[static_cast<std::size_t>(ds.graphs[i].label)];
        for (int c = 0; c < ds.num_classes; ++c) {
            const std::size_t cc = static_cast<std::size_t>(c);
            if (class_count[cc] > 0 && class_count[cc] == in_fold[cc]) {
                if (class_count[cc] < static_cast<std::size_t>(cfg.folds))
                    throw ValidationError(
                        "stratification: class " + std::to_string(c) + " has only " +
                        std::to_string(class_count[cc]) +
                        " members; fold " + std::to_string(f) +
                        " would train without it");
                metrics.warnings.push_back("class " + std::to_string(c) +
                                           " absent from training fold " +
                                           std::to_string(f));
            }
        }
    }

    std::vector<double> fold_acc;
    for (int f = 0; f < cfg.folds; ++f) {
        GraphDataset train_ds;
        train_ds.name = ds.name;
        train_ds.num_classes = ds.num_classes;
        std::vector<std::size_t> test_idx;
        for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
            if (fold_of[i] == f)
                test_idx.push_back(i);
            else
                train_ds.graphs.push_back(ds.graphs[i]);
        }

        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = cfg.seed + static_cast<std::uint64_t>(f);
        const TrainResult trained = train(train_ds, fold_cfg, resolved);

        std::vector<int> predictions, truth;
        for (const std::size_t i : test_idx) {
            predictions.push_back(predict_label(forward(ds.graphs[i], trained.params, resolved)));
            truth.push_back(ds.graphs[i].label);
        }

        FoldResult fold;
        fold.epochs = trained.metrics.epochs;
        fold.test_accuracy = evaluate_accuracy(predictions, truth);
        fold.test_size = test_idx.size();
        fold_acc.push_back(fold.test_accuracy);
        metrics.folds.push_back(std::move(fold));
    }

    // Ordered reduce: fold order is fixed, so the sums are reproducible.
    double mean = 0.0;
    for (const double a : fold_acc) mean += a;
    mean /= static_cast<double>(fold_acc.size());
    double var = 0.0;
    for (const double a : fold_acc) var += (a - mean) * (a - mean);
    var /= static_cast<double>(fold_acc.size());
    metrics.mean_accuracy = mean;
    metrics.std_accuracy = std::sqrt(var);
    return metrics;
}

std::string metrics_to_json(const Metrics& metrics) {
    nlohmann::json j;
    j["mean_accuracy"] = metrics.mean_accuracy;
    j["std_accuracy"] = metrics.std_accuracy;
    j["warnings"] = metrics.warnings;
    if (!metrics.epochs.empty()) {
        nlohmann::json curve;
        for (const EpochStats& e : metrics.epochs) {
            curve["loss"].push_back(e.train_loss);
            curve["accuracy"].push_back(e.train_accuracy);
        }
        j["train"] = std::move(curve);
    }
    if (!metrics.folds.empty()) {
        nlohmann::json folds = nlohmann::json::array();
        nlohmann::json accs = nlohmann::json::array();
        for (const FoldResult& fold : metrics.folds) {
            nlohmann::json jf;
            jf["test_accuracy"] = fold.test_accuracy;
            jf["test_size"] = fold.test_size;
            for (const EpochStats& e : fold.epochs) {
                jf["train_loss"].push_back(e.train_loss);
                jf["train_accuracy"].push_back(e.train_accuracy);
            }
            folds.push_back(std::move(jf));
            accs.push_back(fold.test_accuracy);
        }
        j["folds"] = std::move(folds);
        j["fold_accuracies"] = std::move(accs);
    }
    return j.dump(1) + "\n";
}

void write_metrics_json(const Metrics& metrics, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write metrics to " + path);
    out << metrics_to_json(metrics);
    if (!out) throw IoError("write failed for " + path);
}

std::string metrics_table(const Metrics& metrics) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(6);
    if (!metrics.folds.empty()) {
        out << std::setw(6) << "fold" << std::setw(12) << "test_acc" << std::setw(12)
            << "test_n" << std::setw(14) << "final_loss" << '\n';
        for (std::size_t f = 0; f < metrics.folds.size(); ++f) {
            const FoldResult& fold = metrics.folds[f];
            const double final_loss =
                fold.epochs.empty() ? 0.0 : fold.epochs.back().train_loss;
            out << std::setw(6) << f << std::setw(12) << fold.test_accuracy
                << std::setw(12) << fold.test_size << std::setw(14) << final_loss << '\n';
        }
        out << "mean accuracy " << metrics.mean_accuracy << " +- " << metrics.std_accuracy
            << '\n';
    }
    if (!metrics.epochs.empty()) {
        out << std::setw(6) << "epoch" << std::setw(14) << "train_loss" << std::setw(12)
            << "train_acc" << '\n';
        for (std::size_t e = 0; e < metrics.epochs.size(); ++e)
            out << std::setw(6) << e << std::setw(14) << metrics.epochs[e].train_loss
                << std::setw(12) << metrics.epochs[e].train_accuracy << '\n';
    }
    for (const std::string& warning : metrics.warnings)
        out << "warning: " << warning << '\n';
    return out.str();
}

void write_epoch_csv(const Metrics& metrics, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write curves to " + path);
    out << "fold,epoch,train_loss,train_accuracy\n";
    out << std::setprecision(10);
    auto dump_fold = [&](int fold, const std::vector<EpochStats>& epochs) {
        for (std::size_t e = 0; e < epochs.size(); ++e)
            out << fold << ',' << e << ',' << epochs[e].train_loss << ','
                << epochs[e].train_accuracy << '\n';
    };
    if (!metrics.epochs.empty()) dump_fold(0, metrics.epochs);
    for (std::size_t f = 0; f < metrics.folds.size(); ++f)
        dump_fold(static_cast<int>(f), metrics.folds[f].epochs);
    if (!out) throw IoError("write failed for " + path);
}

} // namespace mcgc
