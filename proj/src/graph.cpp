#include "mcgc/graph.hpp"

#include <cmath>

#include "mcgc/errors.hpp"

namespace mcgc {

void validate_graph(const Graph& g) {
    const std::size_t n = g.adjacency.rows();
    if (n == 0) throw ValidationError("graph: empty adjacency");
    if (g.adjacency.cols() != n)
        throw ValidationError("graph: adjacency not square, " + shape_str(g.adjacency));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = g.adjacency(i, j);
            if (v < 0.0) throw ValidationError("graph: negative adjacency entry");
            if (g.adjacency(j, i) != v)
                throw ValidationError("graph: adjacency not symmetric");
        }
    }
    if (g.features.rows() != n)
        throw ValidationError("graph: feature rows " + shape_str(g.features) +
                              " do not match node count");
    if (g.node_ids && g.node_ids->size() != n)
        throw ValidationError("graph: node_ids length does not match node count");
    if (g.target_index && (*g.target_index < 0 || static_cast<std::size_t>(*g.target_index) >= n))
        throw ValidationError("graph: target_index out of range");
}

void validate_dataset(const GraphDataset& ds) {
    if (ds.num_classes < 2) throw ValidationError("dataset: num_classes < 2");
    for (const Graph& g : ds.graphs) {
        if (g.label < 0 || g.label >= ds.num_classes)
            throw ValidationError("dataset '" + ds.name + "': label out of range");
    }
}

Matrix add_self_loops(const Matrix& adjacency) {
    if (adjacency.rows() != adjacency.cols())
        throw ValidationError("add_self_loops: matrix not square, " + shape_str(adjacency));
    Matrix out = adjacency;
    for (std::size_t i = 0; i < out.rows(); ++i) out(i, i) += 1.0;
    return out;
}

Matrix sym_normalize(const Matrix& a) {
    if (a.rows() != a.cols())
        throw ValidationError("sym_normalize: matrix not square, " + shape_str(a));
    const std::size_t n = a.rows();
    std::vector<double> inv_sqrt_deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
        if (deg <= 0.0)
            throw NumericError("sym_normalize: row " + std::to_string(i) +
                               " has nonpositive degree");
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out(i, j) = inv_sqrt_deg[i] * a(i, j) * inv_sqrt_deg[j];
    return out;
}

Graph permute_nodes(const Graph& g, const std::vector<std::size_t>& perm) {
    const std::size_t n = g.num_nodes();
    if (perm.size() != n)
        throw ValidationError("permute_nodes: permutation length != node count");
    std::vector<std::size_t> inverse(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (perm[i] >= n || inverse[perm[i]] != n)
            throw ValidationError("permute_nodes: not a bijection on 0..N-1");
        inverse[perm[i]] = i;
    }

    // New node i is old node perm[i].
    Graph out;
    out.adjacency.assign(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out.adjacency(i, j) = g.adjacency(perm[i], perm[j]);
    out.features.assign(n, g.features.cols());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < g.features.cols(); ++j)
            out.features(i, j) = g.features(perm[i], j);
    out.label = g.label;
    if (g.node_ids) {
        std::vector<std::string> ids(n);
        for (std::size_t i = 0; i < n; ++i) ids[i] = (*g.node_ids)[perm[i]];
        out.node_ids = std::move(ids);
    }
    if (g.target_index)
        out.target_index = static_cast<int>(inverse[static_cast<std::size_t>(*g.target_index)]);
    return out;
}

} // namespace mcgc
