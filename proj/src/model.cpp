#include "mcgc/model.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "mcgc/errors.hpp"
#include "mcgc/kernels.hpp"
#include "mcgc/tape.hpp"

namespace mcgc {

void PoolingConfig::validate() const {
    if (layers < 1) throw ValidationError("config: layers must be >= 1");
    if (propagation_steps < 1)
        throw ValidationError("config: propagation_steps must be >= 1");
    if (hidden_dim < 1) throw ValidationError("config: hidden_dim must be >= 1");
    if (cluster_sizes.size() != static_cast<std::size_t>(layers))
        throw ValidationError("config: cluster_sizes must list one size per layer");
    for (std::size_t l = 0; l < cluster_sizes.size(); ++l) {
        if (cluster_sizes[l] == 0)
            throw ValidationError("config: cluster size at layer " + std::to_string(l + 1) +
                                  " must be positive");
        if (l > 0 && cluster_sizes[l] > cluster_sizes[l - 1])
            throw ValidationError("config: cluster_sizes must be nonincreasing");
    }
    if (cluster_sizes.back() < 2)
        throw ValidationError("config: final cluster size must be >= 2");
    if (entropy_coeff < 0.0)
        throw ValidationError("config: entropy_coeff must be nonnegative");
    if (epsilon <= 0.0) throw ValidationError("config: epsilon must be positive");
}

std::vector<std::size_t> default_cluster_sizes(std::size_t max_nodes, int layers) {
    if (max_nodes == 0) throw ValidationError("cluster schedule: max_nodes must be >= 1");
    if (layers < 1) throw ValidationError("cluster schedule: layers must be >= 1");
    std::vector<std::size_t> sizes;
    std::size_t n = max_nodes;
    for (int l = 0; l < layers; ++l) {
        n = std::max<std::size_t>(2, (n + 3) / 4); // ceil(0.25 n), floor 2
        sizes.push_back(n);
    }
    return sizes;
}

std::string conv_weight_name(int layer, int k) {
    return "conv.l" + std::to_string(layer) + ".k" + std::to_string(k);
}

std::string pool_weight_name(int layer, int k) {
    return "pool.l" + std::to_string(layer) + ".k" + std::to_string(k);
}

std::string importance_name(int layer) {
    return "importance.l" + std::to_string(layer);
}

ParamStore make_model_params(const PoolingConfig& cfg, std::size_t input_dim,
                             std::size_t num_classes) {
    cfg.validate();
    if (input_dim == 0) throw ValidationError("model params: input_dim must be >= 1");
    if (num_classes < 2) throw ValidationError("model params: num_classes must be >= 2");
    const std::size_t d = cfg.hidden_dim;
    ParamStore p;
    for (int l = 0; l <= cfg.layers; ++l) {
        const std::size_t in_w = (l == 0) ? input_dim : d;
        for (int k = 1; k <= cfg.propagation_steps; ++k)
            p.add(conv_weight_name(l, k), k == 1 ? in_w : d, d);
    }
    for (int l = 0; l < cfg.layers; ++l) {
        const std::size_t in_w = (l == 0) ? input_dim : d;
        const std::size_t n_next = cfg.cluster_sizes[static_cast<std::size_t>(l)];
        for (int k = 1; k <= cfg.propagation_steps; ++k) {
            const std::size_t rows = (k == 1) ? in_w : d;
            const std::size_t cols = (k == cfg.propagation_steps) ? n_next : d;
            p.add(pool_weight_name(l, k), rows, cols);
        }
    }
    for (int l = 0; l <= cfg.layers; ++l) p.add(importance_name(l), 1, d);
    p.add(kClassifierWeightName, static_cast<std::size_t>(cfg.layers + 1) * d, num_classes);
    p.add(kClassifierBiasName, 1, num_classes);
    return p;
}

// ---- Pure building blocks ------------------------------------------------

Matrix gcn_layer(const Matrix& a_hat, const Matrix& h, const Matrix& w) {
    return relu(kernels::matmul(kernels::matmul(a_hat, h), w));
}

Matrix gnn_block_prenorm(const Matrix& a_hat, const Matrix& x,
                         const std::vector<const Matrix*>& weights) {
    if (weights.empty()) throw ValidationError("gnn_block: needs at least one weight");
    Matrix h = gcn_layer(a_hat, x, *weights[0]);
    for (std::size_t k = 1; k < weights.size(); ++k)
        h = gcn_layer(a_hat, h, *weights[k]);
    return h;
}

Matrix gnn_block(const Matrix& a, const Matrix& x,
                 const std::vector<const Matrix*>& weights) {
    return gnn_block_prenorm(sym_normalize(add_self_loops(a)), x, weights);
}

Matrix assignment_matrix(const Matrix& a, const Matrix& x,
                         const std::vector<const Matrix*>& pool_weights) {
    return softmax_rows(gnn_block(a, x, pool_weights));
}

void coarsen(const Matrix& c, const Matrix& h, const Matrix& a,
             Matrix& x_next, Matrix& a_next) {
    if (c.rows() != h.rows() || c.rows() != a.rows())
        throw ValidationError("coarsen: assignment rows " + shape_str(c) +
                              " do not match node count");
    x_next = kernels::matmul_tn(c, h);
    a_next = kernels::matmul(kernels::matmul_tn(c, a), c);
}

Matrix importance_readout(const Matrix& z, const Matrix& w) {
    if (z.rows() == 0) throw ValidationError("importance_readout: empty node matrix");
    if (w.rows() != 1 || w.cols() != z.cols())
        throw ValidationError("importance_readout: weight must be 1 x " +
                              std::to_string(z.cols()) + ", got " + shape_str(w));
    // Single node: the score cancels out of the weighted mean, so return the
    // row itself (exactly — no multiply/divide round trip).
    if (z.rows() == 1) {
        Matrix s(1, z.cols());
        for (std::size_t j = 0; j < z.cols(); ++j) s(0, j) = z(0, j);
        return s;
    }
    const Matrix theta = sigmoid(kernels::matmul_nt(z, w)); // n x 1 scores in (0,1)
    Matrix s = kernels::matmul_tn(theta, z);                // 1 x d weighted sum
    double den = 0.0;
    for (std::size_t i = 0; i < theta.rows(); ++i) den += theta(i, 0);
    if (den == 0.0) throw NumericError("importance_readout: score sum underflowed to zero");
    for (std::size_t j = 0; j < s.cols(); ++j) s(0, j) /= den;
    return s;
}

Matrix global_readout(const std::vector<Matrix>& blocks, double epsilon) {
    if (blocks.empty()) throw ValidationError("global_readout: no blocks");
    std::size_t total = 0;
    for (const Matrix& b : blocks) {
        if (b.rows() != 1)
            throw ValidationError("global_readout: blocks must be rows, got " + shape_str(b));
        total += b.cols();
    }
    Matrix out(1, total);
    std::size_t offset = 0;
    for (const Matrix& b : blocks) {
        double sum = 0.0;
        for (std::size_t j = 0; j < b.cols(); ++j) sum += b(0, j);
        const double den = sum + epsilon;
        for (std::size_t j = 0; j < b.cols(); ++j) out(0, offset + j) = b(0, j) / den;
        offset += b.cols();
    }
    return out;
}

Matrix classify(const Matrix& s, const Matrix& w, const Matrix& b) {
    return softmax_rows(add(kernels::matmul(s, w), b));
}

namespace {

std::vector<const Matrix*> block_weights(const ParamStore& params, int layer, int steps,
                                         bool pool) {
    std::vector<const Matrix*> w;
    w.reserve(static_cast<std::size_t>(steps));
    for (int k = 1; k <= steps; ++k)
        w.push_back(&params.at(pool ? pool_weight_name(layer, k)
                                    : conv_weight_name(layer, k)));
    return w;
}

void check_input_width(const Graph& g, const ParamStore& params) {
    const std::size_t expect = params.at(conv_weight_name(0, 1)).rows();
    if (g.feature_dim() != expect)
        throw ValidationError("forward: model expects feature width " +
                              std::to_string(expect) + ", graph has " +
                              std::to_string(g.feature_dim()));
}

} // namespace

Matrix forward(const Graph& g, const ParamStore& params, const PoolingConfig& cfg,
               LayerState* state) {
    cfg.validate();
    check_input_width(g, params);

    Matrix a = g.adjacency;
    Matrix x = g.features;
    std::vector<Matrix> z_all;     // Z_0 .. Z_L
    std::vector<Matrix> c_all;     // C^0 .. C^{L-1}
    std::vector<Matrix> a_all = {a};
    std::vector<Matrix> x_all = {x};

    for (int l = 0; l < cfg.layers; ++l) {
        const Matrix a_hat = sym_normalize(add_self_loops(a));
        Matrix z = gnn_block_prenorm(a_hat, x, block_weights(params, l, cfg.propagation_steps, false));
        Matrix c = softmax_rows(
            gnn_block_prenorm(a_hat, x, block_weights(params, l, cfg.propagation_steps, true)));
        Matrix x_next, a_next;
        coarsen(c, z, a, x_next, a_next);
        z_all.push_back(std::move(z));
        c_all.push_back(std::move(c));
        a = std::move(a_next);
        x = std::move(x_next);
        a_all.push_back(a);
        x_all.push_back(x);
    }
    z_all.push_back(gnn_block_prenorm(sym_normalize(add_self_loops(a)), x,
                                      block_weights(params, cfg.layers, cfg.propagation_steps, false)));

    std::vector<Matrix> s_blocks;
    for (int l = 0; l <= cfg.layers; ++l)
        s_blocks.push_back(importance_readout(z_all[static_cast<std::size_t>(l)],
                                              params.at(importance_name(l))));
    const Matrix s_global = global_readout(s_blocks, cfg.epsilon);
    Matrix probs = classify(s_global, params.at(kClassifierWeightName),
                            params.at(kClassifierBiasName));

    if (state != nullptr) {
        state->adjacency = std::move(a_all);
        state->features = std::move(x_all);
        state->node_repr = std::move(z_all);
        state->assignment = std::move(c_all);
        state->channel_repr = std::move(s_blocks);
        state->global_repr = s_global;
    }
    return probs;
}

double mcgc_loss(const Matrix& probs, int label,
                 const std::vector<Matrix>& assignments, const PoolingConfig& cfg) {
    if (probs.rows() != 1)
        throw ValidationError("loss: probability row expected, got " + shape_str(probs));
    if (label < 0 || static_cast<std::size_t>(label) >= probs.cols())
        throw ValidationError("loss: label " + std::to_string(label) + " out of range");
    const double ce = -std::log(std::max(probs(0, static_cast<std::size_t>(label)), cfg.epsilon));
    double ent = 0.0;
    for (const Matrix& c : assignments) ent += mean_row_entropy(c);
    return ce + cfg.entropy_coeff * ent;
}

double graph_loss(const Graph& g, const ParamStore& params, const PoolingConfig& cfg) {
    LayerState state;
    const Matrix probs = forward(g, params, cfg, &state);
    return mcgc_loss(probs, g.label, state.assignment, cfg);
}

// ---- Tape-based gradients -------------------------------------------------

namespace {

// Self-loops + symmetric normalization, differentiably: for pooled levels the
// adjacency depends on earlier assignments, so the normalization itself must
// carry gradients.
Tape::NodeId tape_normalize(Tape& t, Tape::NodeId a) {
    const std::size_t n = t.value(a).rows();
    const Tape::NodeId eye = t.input(Matrix::identity(n));
    const Tape::NodeId with_loops = t.add(a, eye);
    const Tape::NodeId inv_sqrt_deg = t.rsqrt(t.row_sum(with_loops));
    return t.mul_cols(t.mul_rows(with_loops, inv_sqrt_deg), inv_sqrt_deg);
}

Tape::NodeId tape_gnn_block(Tape& t, Tape::NodeId a_hat, Tape::NodeId x,
                            const std::vector<Tape::NodeId>& weights) {
    Tape::NodeId h = x;
    for (const Tape::NodeId w : weights)
        h = t.relu(t.matmul(t.matmul(a_hat, h), w));
    return h;
}

Tape::NodeId tape_importance(Tape& t, Tape::NodeId z, Tape::NodeId w) {
    if (t.value(z).rows() == 1) return z; // score cancels; see importance_readout
    const Tape::NodeId theta = t.sigmoid(t.matmul_nt(z, w));
    return t.div_by_scalar(t.matmul_tn(theta, z), t.sum_all(theta));
}

void check_layer_finite(const Tape& t, Tape::NodeId id, const char* what, int layer) {
    if (!all_finite(t.value(id)))
        throw NumericError(std::string("non-finite ") + what + " at layer " +
                           std::to_string(layer));
}

} // namespace

double loss_and_gradients(const Graph& g, const ParamStore& params,
                          const PoolingConfig& cfg, ParamStore& grads,
                          Matrix* probs_out) {
    cfg.validate();
    check_input_width(g, params);
    if (g.label < 0) throw ValidationError("gradients: negative label");

    Tape t;
    std::map<std::string, Tape::NodeId> leaf;
    for (const auto& [name, tensor] : params) leaf.emplace(name, t.input(tensor));

    auto weight_ids = [&](int layer, bool pool) {
        std::vector<Tape::NodeId> ids;
        for (int k = 1; k <= cfg.propagation_steps; ++k)
            ids.push_back(leaf.at(pool ? pool_weight_name(layer, k)
                                       : conv_weight_name(layer, k)));
        return ids;
    };

    Tape::NodeId a = t.input(g.adjacency);
    Tape::NodeId x = t.input(g.features);

    std::vector<Tape::NodeId> z_nodes;
    std::vector<Tape::NodeId> c_nodes;
    for (int l = 0; l < cfg.layers; ++l) {
        const Tape::NodeId a_hat = tape_normalize(t, a);
        const Tape::NodeId z = tape_gnn_block(t, a_hat, x, weight_ids(l, false));
        const Tape::NodeId c = t.softmax_rows(tape_gnn_block(t, a_hat, x, weight_ids(l, true)));
        check_layer_finite(t, z, "convolution output", l);
        check_layer_finite(t, c, "assignment", l);
        z_nodes.push_back(z);
        c_nodes.push_back(c);
        x = t.matmul_tn(c, z);
        a = t.matmul(t.matmul_tn(c, a), c);
    }
    {
        const Tape::NodeId a_hat = tape_normalize(t, a);
        const Tape::NodeId z = tape_gnn_block(t, a_hat, x, weight_ids(cfg.layers, false));
        check_layer_finite(t, z, "convolution output", cfg.layers);
        z_nodes.push_back(z);
    }

    std::vector<Tape::NodeId> norm_blocks;
    for (int l = 0; l <= cfg.layers; ++l) {
        const Tape::NodeId s =
            tape_importance(t, z_nodes[static_cast<std::size_t>(l)], leaf.at(importance_name(l)));
        const Tape::NodeId den = t.add_const(t.row_sum(s), cfg.epsilon);
        norm_blocks.push_back(t.div_by_scalar(s, den));
    }
    const Tape::NodeId s_global = t.concat_cols(norm_blocks);
    const Tape::NodeId probs = t.softmax_rows(
        t.add(t.matmul(s_global, leaf.at(kClassifierWeightName)), leaf.at(kClassifierBiasName)));
    if (static_cast<std::size_t>(g.label) >= t.value(probs).cols())
        throw ValidationError("gradients: label " + std::to_string(g.label) + " out of range");

    const Tape::NodeId ce =
        t.neg_log_entry(probs, static_cast<std::size_t>(g.label), cfg.epsilon);
    Tape::NodeId ent = t.row_entropy_mean(c_nodes[0]);
    for (std::size_t l = 1; l < c_nodes.size(); ++l)
        ent = t.add(ent, t.row_entropy_mean(c_nodes[l]));
    const Tape::NodeId loss = t.add(ce, t.scale_const(ent, cfg.entropy_coeff));
    if (probs_out) *probs_out = t.value(probs);

    t.backward(loss);

    for (auto& [name, gmat] : grads) {
        const Matrix& dv = t.grad(leaf.at(name));
        if (!gmat.same_shape(dv))
            throw ValidationError("gradients: shape of '" + name + "' differs");
        if (!all_finite(dv))
            throw NumericError("non-finite gradient for tensor '" + name + "'");
        for (std::size_t i = 0; i < gmat.size(); ++i) gmat.data()[i] += dv.data()[i];
    }
    return t.value(loss)(0, 0);
}

ParamStore param_gradients(const Graph& g, const ParamStore& params,
                           const PoolingConfig& cfg) {
    ParamStore grads = params.zeros_like();
    loss_and_gradients(g, params, cfg, grads);
    return grads;
}

// ---- Checkpointing ---------------------------------------------------------

namespace {

constexpr char kCkptMagic[8] = {'M', 'C', 'G', 'C', 'C', 'K', 'P', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    ckpt.config.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(kCkptMagic, sizeof(kCkptMagic));
    write_pod(out, static_cast<std::int32_t>(ckpt.config.layers));
    write_pod(out, static_cast<std::int32_t>(ckpt.config.propagation_steps));
    write_pod(out, static_cast<std::uint64_t>(ckpt.config.hidden_dim));
    write_pod(out, ckpt.config.entropy_coeff);
    write_pod(out, ckpt.config.epsilon);
    write_pod(out, static_cast<std::uint64_t>(ckpt.config.cluster_sizes.size()));
    for (const std::size_t n : ckpt.config.cluster_sizes)
        write_pod(out, static_cast<std::uint64_t>(n));
    write_pod(out, static_cast<std::uint64_t>(ckpt.input_dim));
    write_pod(out, static_cast<std::uint64_t>(ckpt.num_classes));
    write_pod(out, static_cast<std::uint64_t>(ckpt.params.num_tensors()));
    for (const auto& [name, tensor] : ckpt.params) {
        write_pod(out, static_cast<std::uint64_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(out, static_cast<std::uint64_t>(tensor.rows()));
        write_pod(out, static_cast<std::uint64_t>(tensor.cols()));
        out.write(reinterpret_cast<const char*>(tensor.data()),
                  static_cast<std::streamsize>(tensor.size() * sizeof(double)));
    }
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
        throw IoError("not a model checkpoint: " + path);

    Checkpoint ckpt;
    std::int32_t layers = 0, steps = 0;
    std::uint64_t dim = 0, n_sizes = 0, input_dim = 0, num_classes = 0, n_tensors = 0;
    read_pod(in, layers);
    read_pod(in, steps);
    read_pod(in, dim);
    read_pod(in, ckpt.config.entropy_coeff);
    read_pod(in, ckpt.config.epsilon);
    read_pod(in, n_sizes);
    if (!in || n_sizes > 1u << 20) throw IoError("corrupt checkpoint header: " + path);
    ckpt.config.layers = layers;
    ckpt.config.propagation_steps = steps;
    ckpt.config.hidden_dim = static_cast<std::size_t>(dim);
    for (std::uint64_t i = 0; i < n_sizes; ++i) {
        std::uint64_t n = 0;
        read_pod(in, n);
        ckpt.config.cluster_sizes.push_back(static_cast<std::size_t>(n));
    }
    read_pod(in, input_dim);
    read_pod(in, num_classes);
    read_pod(in, n_tensors);
    if (!in) throw IoError("corrupt checkpoint header: " + path);
    ckpt.input_dim = static_cast<std::size_t>(input_dim);
    ckpt.num_classes = static_cast<std::size_t>(num_classes);
    for (std::uint64_t i = 0; i < n_tensors; ++i) {
        std::uint64_t name_len = 0, rows = 0, cols = 0;
        read_pod(in, name_len);
        if (!in || name_len > 4096) throw IoError("corrupt checkpoint tensor: " + path);
        std::string name(static_cast<std::size_t>(name_len), '\0');
        in.read(name.data(), static_cast<std::streamsize>(name_len));
        read_pod(in, rows);
        read_pod(in, cols);
        if (!in) throw IoError("corrupt checkpoint tensor: " + path);
        ckpt.params.add(name, static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
        Matrix& tensor = ckpt.params.at(name);
        in.read(reinterpret_cast<char*>(tensor.data()),
                static_cast<std::streamsize>(tensor.size() * sizeof(double)));
        if (!in) throw IoError("truncated checkpoint tensor '" + name + "': " + path);
    }
    ckpt.config.validate();
    return ckpt;
}

} // namespace mcgc
