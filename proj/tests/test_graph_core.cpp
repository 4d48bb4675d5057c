#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "mcgc/errors.hpp"
#include "mcgc/graph.hpp"
#include "mcgc/rng.hpp"

using mcgc::Graph;
using mcgc::Matrix;

namespace {

Graph path_graph(std::size_t n, std::size_t feature_dim) {
    Graph g;
    g.adjacency.assign(n, n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        g.adjacency(i, i + 1) = 1.0;
        g.adjacency(i + 1, i) = 1.0;
    }
    g.features.assign(n, feature_dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < feature_dim; ++j)
            g.features(i, j) = static_cast<double>(i * feature_dim + j);
    return g;
}

} // namespace

TEST_SUITE("graph-core") {

TEST_CASE("validate_graph accepts a well-formed graph") {
    Graph g = path_graph(4, 2);
    g.target_index = 0;
    g.node_ids = std::vector<std::string>{"a", "b", "c", "d"};
    CHECK_NOTHROW(mcgc::validate_graph(g));
}

TEST_CASE("validate_graph rejects structural violations") {
    Graph g = path_graph(3, 2);

    SUBCASE("empty") {
        Graph e;
        CHECK_THROWS_AS(mcgc::validate_graph(e), mcgc::ValidationError);
    }
    SUBCASE("asymmetric adjacency") {
        g.adjacency(0, 2) = 1.0;
        CHECK_THROWS_AS(mcgc::validate_graph(g), mcgc::ValidationError);
    }
    SUBCASE("negative weight") {
        g.adjacency(0, 1) = g.adjacency(1, 0) = -1.0;
        CHECK_THROWS_AS(mcgc::validate_graph(g), mcgc::ValidationError);
    }
    SUBCASE("feature row mismatch") {
        g.features.assign(2, 2);
        CHECK_THROWS_AS(mcgc::validate_graph(g), mcgc::ValidationError);
    }
    SUBCASE("target out of range") {
        g.target_index = 3;
        CHECK_THROWS_AS(mcgc::validate_graph(g), mcgc::ValidationError);
    }
    SUBCASE("node_ids length mismatch") {
        g.node_ids = std::vector<std::string>{"a"};
        CHECK_THROWS_AS(mcgc::validate_graph(g), mcgc::ValidationError);
    }
}

TEST_CASE("validate_dataset checks labels") {
    mcgc::GraphDataset ds;
    ds.name = "toy";
    ds.num_classes = 2;
    ds.graphs.push_back(path_graph(3, 1));
    ds.graphs.back().label = 1;
    CHECK_NOTHROW(mcgc::validate_dataset(ds));

    ds.graphs.back().label = 2;
    CHECK_THROWS_AS(mcgc::validate_dataset(ds), mcgc::ValidationError);

    ds.graphs.back().label = 0;
    ds.num_classes = 1;
    CHECK_THROWS_AS(mcgc::validate_dataset(ds), mcgc::ValidationError);
}

TEST_CASE("add_self_loops increments only the diagonal") {
    const Graph g = path_graph(3, 1);
    const Matrix a = mcgc::add_self_loops(g.adjacency);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(a(i, j) == g.adjacency(i, j) + (i == j ? 1.0 : 0.0));
    CHECK_THROWS_AS((void)mcgc::add_self_loops(Matrix(2, 3)), mcgc::ValidationError);
}

TEST_CASE("sym_normalize matches hand values on a path of three nodes") {
    // With self-loops the path 0-1-2 has degrees (2, 3, 2).
    const Matrix a = mcgc::add_self_loops(path_graph(3, 1).adjacency);
    const Matrix n = mcgc::sym_normalize(a);
    CHECK(n(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(n(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-15));
    CHECK(n(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(n(0, 2) == 0.0);
    // Symmetry is preserved exactly.
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(n(i, j) == n(j, i));
}

TEST_CASE("sym_normalize rejects empty rows") {
    Matrix a(2, 2); // all zero: degree 0
    CHECK_THROWS_AS((void)mcgc::sym_normalize(a), mcgc::NumericError);
}

TEST_CASE("normalized entries lie in [0, 1] with 1/degree on the diagonal") {
    const Matrix a = mcgc::add_self_loops(path_graph(5, 1).adjacency);
    const Matrix n = mcgc::sym_normalize(a);
    // Self-loop degrees on the 5-path: 2, 3, 3, 3, 2.
    const double deg[5] = {2, 3, 3, 3, 2};
    for (std::size_t i = 0; i < n.rows(); ++i) {
        CHECK(n(i, i) == doctest::Approx(1.0 / deg[i]).epsilon(1e-15));
        for (std::size_t j = 0; j < n.cols(); ++j) {
            CHECK(n(i, j) >= 0.0);
            CHECK(n(i, j) <= 1.0);
        }
    }
}

TEST_CASE("permute_nodes gathers rows and remaps the target") {
    Graph g = path_graph(4, 2);
    g.target_index = 1;
    g.node_ids = std::vector<std::string>{"n0", "n1", "n2", "n3"};
    const std::vector<std::size_t> perm{2, 0, 3, 1}; // new i = old perm[i]

    const Graph p = mcgc::permute_nodes(g, perm);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(p.adjacency(i, j) == g.adjacency(perm[i], perm[j]));
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(p.features(i, j) == g.features(perm[i], j));
        CHECK((*p.node_ids)[i] == (*g.node_ids)[perm[i]]);
    }
    // Old node 1 landed at new position 3.
    CHECK(*p.target_index == 3);
    CHECK(p.label == g.label);
}

TEST_CASE("permuting back with the inverse restores the graph bitwise") {
    mcgc::rng::Engine eng(21);
    Graph g = path_graph(6, 3);
    g.target_index = 4;
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0u);
    mcgc::rng::shuffle(perm, eng);
    std::vector<std::size_t> inverse(6);
    for (std::size_t i = 0; i < 6; ++i) inverse[perm[i]] = i;

    const Graph round_trip = mcgc::permute_nodes(mcgc::permute_nodes(g, perm), inverse);
    CHECK(round_trip.adjacency == g.adjacency);
    CHECK(round_trip.features == g.features);
    CHECK(*round_trip.target_index == *g.target_index);
}

TEST_CASE("permute_nodes rejects non-bijections") {
    const Graph g = path_graph(3, 1);
    CHECK_THROWS_AS((void)mcgc::permute_nodes(g, {0, 0, 1}), mcgc::ValidationError);
    CHECK_THROWS_AS((void)mcgc::permute_nodes(g, {0, 1}), mcgc::ValidationError);
    CHECK_THROWS_AS((void)mcgc::permute_nodes(g, {0, 1, 5}), mcgc::ValidationError);
}

} // TEST_SUITE
