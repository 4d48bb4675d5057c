#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "mcgc/dataset_io.hpp"
#include "mcgc/errors.hpp"
#include "mcgc/tu_loader.hpp"

using namespace mcgc;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << content;
}

/// Two graphs: a triangle (nodes 1-3, class 1) and a single edge (nodes 4-5,
/// class -1), with node labels 0,0,1,2,2.
std::string fixture_dir(const std::string& tag) {
    const fs::path dir = fs::path("mcgc_test_tmp") / ("tu_" + tag);
    write_file(dir / "FIX_A.txt",
               "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n");
    write_file(dir / "FIX_graph_indicator.txt", "1\n1\n1\n2\n2\n");
    write_file(dir / "FIX_graph_labels.txt", "1\n-1\n");
    write_file(dir / "FIX_node_labels.txt", "0\n0\n1\n2\n2\n");
    return dir.string();
}

} // namespace

TEST_SUITE_BEGIN("tu-loader");

TEST_CASE("fixture: triangle and single edge load with exact adjacencies") {
    const GraphDataset ds = load_tu_dataset(fixture_dir("basic"), "FIX");
    REQUIRE(ds.graphs.size() == 2);
    CHECK(ds.num_classes == 2);

    const Matrix& tri = ds.graphs[0].adjacency;
    REQUIRE(tri.rows() == 3);
    const double want_tri[3][3] = {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(tri(i, j) == want_tri[i][j]);

    const Matrix& pair = ds.graphs[1].adjacency;
    REQUIRE(pair.rows() == 2);
    CHECK(pair(0, 0) == 0.0);
    CHECK(pair(0, 1) == 1.0);
    CHECK(pair(1, 0) == 1.0);
    CHECK(pair(1, 1) == 0.0);

    // Labels {1, -1} remap to sorted-contiguous {1, 0}.
    CHECK(ds.graphs[0].label == 1);
    CHECK(ds.graphs[1].label == 0);
}

TEST_CASE("fixture: node labels become one-hot features") {
    const GraphDataset ds = load_tu_dataset(fixture_dir("onehot"), "FIX");
    const Matrix& f0 = ds.graphs[0].features; // labels 0,0,1 of 3 classes
    REQUIRE(f0.rows() == 3);
    REQUIRE(f0.cols() == 3);
    CHECK(f0(0, 0) == 1.0);
    CHECK(f0(1, 0) == 1.0);
    CHECK(f0(2, 1) == 1.0);
    CHECK(f0(0, 1) == 0.0);
    const Matrix& f1 = ds.graphs[1].features; // labels 2,2
    CHECK(f1(0, 2) == 1.0);
    CHECK(f1(1, 2) == 1.0);
}

TEST_CASE("degree one-hot fallback when node labels are absent") {
    const fs::path dir = fs::path("mcgc_test_tmp") / "tu_nolabels";
    write_file(dir / "D_A.txt", "1, 2\n2, 1\n2, 3\n3, 2\n1, 3\n3, 1\n4, 5\n5, 4\n");
    write_file(dir / "D_graph_indicator.txt", "1\n1\n1\n2\n2\n");
    write_file(dir / "D_graph_labels.txt", "1\n2\n");
    const GraphDataset ds = load_tu_dataset(dir.string(), "D");
    const Matrix& f0 = ds.graphs[0].features;
    REQUIRE(f0.cols() == kDegreeFeatureDim);
    for (std::size_t i = 0; i < 3; ++i) CHECK(f0(i, 2) == 1.0); // triangle: degree 2
    const Matrix& f1 = ds.graphs[1].features;
    CHECK(f1(0, 1) == 1.0); // single edge: degree 1
    CHECK(f1(1, 1) == 1.0);
}

TEST_CASE("degree one-hot caps at the last bucket") {
    // Star with 35 leaves: center degree 35 lands in the cap bucket. A second
    // two-node graph keeps the dataset at two classes.
    const fs::path dir = fs::path("mcgc_test_tmp") / "tu_cap";
    std::string edges;
    std::string indicator = "1\n";
    for (int leaf = 2; leaf <= 36; ++leaf) {
        edges += "1, " + std::to_string(leaf) + "\n";
        edges += std::to_string(leaf) + ", 1\n";
        indicator += "1\n";
    }
    write_file(dir / "S_A.txt", edges + "37, 38\n38, 37\n");
    write_file(dir / "S_graph_indicator.txt", indicator + "2\n2\n");
    write_file(dir / "S_graph_labels.txt", "0\n1\n");

    const GraphDataset ds = load_tu_dataset(dir.string(), "S");
    const Matrix& f = ds.graphs[0].features;
    CHECK(f(0, kDegreeFeatureDim - 1) == 1.0); // capped bucket
    CHECK(f(1, 1) == 1.0);                     // leaves have degree 1
}

TEST_CASE("missing mandatory file raises an I/O error naming it") {
    const fs::path dir = fs::path("mcgc_test_tmp") / "tu_missing";
    write_file(dir / "M_A.txt", "1, 2\n2, 1\n");
    write_file(dir / "M_graph_indicator.txt", "1\n1\n");
    // no M_graph_labels.txt
    CHECK_THROWS_WITH_AS(load_tu_dataset(dir.string(), "M"),
                         doctest::Contains("M_graph_labels.txt"), IoError);
}

TEST_CASE("edge crossing two graphs raises a format error with its line number") {
    const fs::path dir = fs::path("mcgc_test_tmp") / "tu_cross";
    write_file(dir / "X_A.txt", "1, 2\n2, 1\n3, 4\n4, 3\n2, 3\n");
    write_file(dir / "X_graph_indicator.txt", "1\n1\n2\n2\n");
    write_file(dir / "X_graph_labels.txt", "0\n1\n");
    CHECK_THROWS_WITH_AS(load_tu_dataset(dir.string(), "X"), doctest::Contains("line 5"),
                         ValidationError);
}

TEST_CASE("node id out of range raises a format error with its line number") {
    const fs::path dir = fs::path("mcgc_test_tmp") / "tu_range";
    write_file(dir / "R_graph_indicator.txt", "1\n1\n2\n2\n");
    write_file(dir / "R_graph_labels.txt", "0\n1\n");
    write_file(dir / "R_A.txt", "1, 2\n2, 1\n3, 4\n4, 3\n1, 9\n");
    CHECK_THROWS_WITH_AS(load_tu_dataset(dir.string(), "R"), doctest::Contains("line 5"),
                         ValidationError);
}

TEST_CASE("reloading the same directory yields an identical dataset") {
    const std::string dir = fixture_dir("reload");
    const GraphDataset a = load_tu_dataset(dir, "FIX");
    const GraphDataset b = load_tu_dataset(dir, "FIX");
    CHECK(dataset_fingerprint(a) == dataset_fingerprint(b));
}

TEST_CASE("loaded adjacency is symmetric and binary") {
    const GraphDataset ds = load_tu_dataset(fixture_dir("syminv"), "FIX");
    for (const Graph& g : ds.graphs)
        for (std::size_t i = 0; i < g.num_nodes(); ++i)
            for (std::size_t j = 0; j < g.num_nodes(); ++j) {
                CHECK(g.adjacency(i, j) == g.adjacency(j, i));
                CHECK((g.adjacency(i, j) == 0.0 || g.adjacency(i, j) == 1.0));
            }
}

TEST_CASE("stats: single triangle") {
    GraphDataset ds;
    ds.name = "tri";
    ds.num_classes = 2;
    Graph g;
    g.adjacency.assign(3, 3);
    g.adjacency(0, 1) = g.adjacency(1, 0) = 1.0;
    g.adjacency(1, 2) = g.adjacency(2, 1) = 1.0;
    g.adjacency(0, 2) = g.adjacency(2, 0) = 1.0;
    g.features.assign(3, 1);
    g.label = 0;
    ds.graphs.push_back(g);
    const DatasetStats stats = dataset_stats(ds);
    CHECK(stats.num_graphs == 1);
    CHECK(stats.mean_nodes == 3.0);
    CHECK(stats.mean_edges == 3.0);
}

TEST_CASE("stats: mean node count over graphs of sizes 2 and 4") {
    GraphDataset ds;
    ds.name = "pair";
    ds.num_classes = 2;
    Graph a;
    a.adjacency.assign(2, 2);
    a.adjacency(0, 1) = a.adjacency(1, 0) = 1.0;
    a.features.assign(2, 1);
    a.label = 0;
    Graph b;
    b.adjacency.assign(4, 4);
    b.adjacency(0, 1) = b.adjacency(1, 0) = 1.0;
    b.features.assign(4, 1);
    b.label = 1;
    ds.graphs = {a, b};
    const DatasetStats stats = dataset_stats(ds);
    CHECK(stats.mean_nodes == 3.0);
    CHECK(stats.mean_edges == 1.0);
}

TEST_CASE("stats: fixture numbers") {
    const GraphDataset ds = load_tu_dataset(fixture_dir("stats"), "FIX");
    const DatasetStats stats = dataset_stats(ds);
    CHECK(stats.num_graphs == 2);
    CHECK(stats.num_classes == 2);
    CHECK(stats.mean_nodes == 2.5); // (3 + 2) / 2
    CHECK(stats.mean_edges == 2.0); // (3 + 1) / 2
}

TEST_CASE("stats: empty dataset raises a validation error") {
    GraphDataset ds;
    ds.name = "empty";
    CHECK_THROWS_AS(dataset_stats(ds), ValidationError);
}

TEST_SUITE_END();
