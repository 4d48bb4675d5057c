#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mcgc/graph.hpp"
#include "mcgc/matrix.hpp"
#include "mcgc/numerics.hpp"

namespace mcgc {

/// Architecture of the hierarchical-pooling classifier: `layers` pooling
/// stages, each built from `propagation_steps` chained graph convolutions of
/// width `hidden_dim`, coarsening the graph down the `cluster_sizes`
/// schedule. The loss adds `entropy_coeff` times the mean assignment-row
/// entropy per stage; `epsilon` floors probabilities inside logs and guards
/// readout normalization.
struct PoolingConfig {
    int layers = 3;                         // pooling stages L
    int propagation_steps = 3;              // convolutions per block K
    std::size_t hidden_dim = 64;            // feature width d
    std::vector<std::size_t> cluster_sizes; // n_1 .. n_L
    double entropy_coeff = 1.0;
    double epsilon = 1e-12;

    /// Throws ValidationError unless: layers >= 1, propagation_steps >= 1,
    /// hidden_dim >= 1, cluster_sizes has `layers` entries, strictly
    /// positive and nonincreasing with the last >= 2, entropy_coeff >= 0,
    /// epsilon > 0.
    void validate() const;
};

/// Quartering schedule n_{l+1} = max(2, ceil(0.25 * n_l)) starting from the
/// dataset's maximum node count. Fixed across graphs because the pooling
/// weights determine the assignment width.
std::vector<std::size_t> default_cluster_sizes(std::size_t max_nodes, int layers);

// Tensor naming scheme. All model parameters live in one ParamStore under
// these names; seeded init fills them in name order.
std::string conv_weight_name(int layer, int k);  // conv.l{layer}.k{k}
std::string pool_weight_name(int layer, int k);  // pool.l{layer}.k{k}
std::string importance_name(int layer);          // importance.l{layer}
inline const char* kClassifierWeightName = "classifier.weight";
inline const char* kClassifierBiasName = "classifier.bias";

/// Builds the full parameter set for `cfg` on graphs of feature width
/// `input_dim` with `num_classes` output classes:
///   conv.l{l}.k{k}   l = 0..L,   k = 1..K   (first k maps the block's input
///                                            width to hidden_dim, later d x d)
///   pool.l{l}.k{k}   l = 0..L-1, k = 1..K   (last k's output width is n_{l+1})
///   importance.l{l}  l = 0..L               (1 x d scoring vector)
///   classifier.weight ((L+1)*d) x num_classes, classifier.bias 1 x num_classes
/// Values are zero; call init_uniform_glorot to fill.
ParamStore make_model_params(const PoolingConfig& cfg, std::size_t input_dim,
                             std::size_t num_classes);

/// Intermediate products of one forward pass, indexed by pooling level.
struct LayerState {
    std::vector<Matrix> adjacency;    // A^0 .. A^L
    std::vector<Matrix> features;     // X^0 .. X^L
    std::vector<Matrix> node_repr;    // Z_0 .. Z_L (convolution outputs)
    std::vector<Matrix> assignment;   // C^0 .. C^{L-1}, row-stochastic
    std::vector<Matrix> channel_repr; // S_0 .. S_L, 1 x d each
    Matrix global_repr;               // 1 x (L+1)d concatenated readout
};

// ---- Pure building blocks (no tape) ------------------------------------
// These are the only definition of the forward semantics; the trainable
// path re-expresses the same computations on a tape using the same kernels,
// so both routes agree bitwise.

/// relu(A_hat * H * W).
Matrix gcn_layer(const Matrix& a_hat, const Matrix& h, const Matrix& w);

/// K chained gcn_layer applications sharing one normalized adjacency
/// computed here from the raw A (self-loops + symmetric normalization).
Matrix gnn_block(const Matrix& a, const Matrix& x,
                 const std::vector<const Matrix*>& weights);

/// Same, but the caller supplies the already-normalized adjacency (so one
/// normalization can be shared between the convolution and pooling blocks
/// of a layer).
Matrix gnn_block_prenorm(const Matrix& a_hat, const Matrix& x,
                         const std::vector<const Matrix*>& weights);

/// softmax_rows(gnn_block(A, X, pool_weights)): row-stochastic soft cluster
/// assignment whose width is the final pool weight's output width.
Matrix assignment_matrix(const Matrix& a, const Matrix& x,
                         const std::vector<const Matrix*>& pool_weights);

/// X_next = C^T H, A_next = C^T A C.
void coarsen(const Matrix& c, const Matrix& h, const Matrix& a,
             Matrix& x_next, Matrix& a_next);

/// Importance-weighted mean of node rows: theta(i) = logistic(Z(i) . w),
/// S = sum_i theta(i) Z(i) / sum_i theta(i). `w` is 1 x d; result 1 x d.
Matrix importance_readout(const Matrix& z, const Matrix& w);

/// Each 1 x d block divided by (its component sum + epsilon), concatenated
/// in order into a 1 x (blocks * d) row.
Matrix global_readout(const std::vector<Matrix>& blocks, double epsilon);

/// softmax(s * w + b): 1 x num_classes probability row.
Matrix classify(const Matrix& s, const Matrix& w, const Matrix& b);

/// Full pass: per level l = 0..L-1 compute Z_l (convolution block), C^l
/// (assignment), and the coarsened (X^{l+1}, A^{l+1}); then Z_L on the final
/// pooling graph; importance readout per level; normalized concatenation;
/// classifier. Returns the probability row; fills `state` when non-null.
Matrix forward(const Graph& g, const ParamStore& params, const PoolingConfig& cfg,
               LayerState* state = nullptr);

/// -ln(max(probs[label], cfg.epsilon))
///   + cfg.entropy_coeff * sum_l mean-over-rows(row_entropy(assignments[l])).
double mcgc_loss(const Matrix& probs, int label,
                 const std::vector<Matrix>& assignments, const PoolingConfig& cfg);

/// Loss of one graph under `params` (forward + mcgc_loss). This is the
/// function handed to the finite-difference oracle.
double graph_loss(const Graph& g, const ParamStore& params, const PoolingConfig& cfg);

/// Records the forward pass on a tape and back-propagates, accumulating
/// d loss / d tensor into `grads` (same names/shapes as `params`; zero it
/// first for a plain gradient). Returns the loss. Non-finite intermediates
/// or gradients raise NumericError naming the level or tensor. When
/// `probs_out` is given it receives the 1 x |Y| class probabilities of this
/// forward pass, so training can track accuracy without a second pass.
double loss_and_gradients(const Graph& g, const ParamStore& params,
                          const PoolingConfig& cfg, ParamStore& grads,
                          Matrix* probs_out = nullptr);

/// Convenience wrapper: fresh zero store, one loss_and_gradients call.
ParamStore param_gradients(const Graph& g, const ParamStore& params,
                           const PoolingConfig& cfg);

// ---- Checkpointing ------------------------------------------------------

struct Checkpoint {
    PoolingConfig config;
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;
    ParamStore params;
};

/// Single self-describing binary file: config, dimensions, then every named
/// tensor with shape and raw little-endian doubles. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

} // namespace mcgc
