#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mcgc/matrix.hpp"

namespace mcgc {

/// One classification unit: dense symmetric weighted adjacency, node features,
/// binary/integer class label. Transaction pattern graphs also carry the
/// source addresses and the index of the ego-center node.
struct Graph {
    Matrix adjacency;                                  // N x N, symmetric, >= 0
    Matrix features;                                   // N x D
    int label = 0;                                     // class index in [0, num_classes)
    std::optional<std::vector<std::string>> node_ids;  // e.g. blockchain addresses
    std::optional<int> target_index;                   // ego-center node

    std::size_t num_nodes() const { return adjacency.rows(); }
    std::size_t feature_dim() const { return features.cols(); }
};

/// Throws ValidationError if the graph breaks a structural invariant
/// (square symmetric nonnegative adjacency, matching feature rows, N >= 1).
void validate_graph(const Graph& g);

struct GraphDataset {
    std::string name;
    std::vector<Graph> graphs;
    int num_classes = 2;
};

/// Throws ValidationError on label out of range or num_classes < 2.
void validate_dataset(const GraphDataset& ds);

/// A + I: increments the diagonal by exactly 1. Input is never modified.
Matrix add_self_loops(const Matrix& adjacency);

/// D^{-1/2} (A) D^{-1/2} with D the diagonal row-sum matrix. Expects the
/// self-loop-augmented adjacency, where every row sum is positive; a zero
/// row sum throws NumericError.
Matrix sym_normalize(const Matrix& adjacency_with_loops);

/// Reindex nodes: node i of the result is node perm[i] of the input.
/// Label is unchanged; target_index is remapped. perm must be a bijection.
Graph permute_nodes(const Graph& g, const std::vector<std::size_t>& perm);

} // namespace mcgc
