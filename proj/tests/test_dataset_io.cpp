#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "mcgc/dataset_io.hpp"
#include "mcgc/errors.hpp"
#include "mcgc/tx_ingest.hpp"

using namespace mcgc;
namespace fs = std::filesystem;

namespace {

/// Small mixed dataset: one graph with addresses, one bare graph, awkward
/// double values that must survive the JSON round trip bit for bit.
GraphDataset sample_dataset() {
    GraphDataset ds;
    ds.name = "sample";
    ds.num_classes = 2;

    Graph a;
    a.adjacency.assign(3, 3);
    a.adjacency(0, 1) = a.adjacency(1, 0) = 0.1; // not exactly representable
    a.adjacency(1, 2) = a.adjacency(2, 1) = 1.0 / 3.0;
    a.features.assign(3, 2);
    a.features(0, 0) = 1e-300;
    a.features(1, 1) = -0.30000000000000004;
    a.features(2, 0) = 12345.6789;
    a.label = 0;
    a.node_ids = std::vector<std::string>{"addr_x", "addr_y", "addr_z"};
    a.target_index = 1;
    ds.graphs.push_back(a);

    Graph b;
    b.adjacency.assign(2, 2);
    b.adjacency(0, 1) = b.adjacency(1, 0) = 1.0;
    b.features.assign(2, 2);
    b.features(0, 0) = 1.0;
    b.features(1, 1) = 1.0;
    b.label = 1;
    ds.graphs.push_back(b);
    return ds;
}

} // namespace

TEST_SUITE_BEGIN("dataset-io");

TEST_CASE("round trip preserves every field bit for bit") {
    const GraphDataset ds = sample_dataset();
    const std::string dir = "mcgc_test_tmp/roundtrip";
    save_dataset(ds, dir);
    const GraphDataset back = load_dataset(dir);

    CHECK(back.name == ds.name);
    CHECK(back.num_classes == ds.num_classes);
    REQUIRE(back.graphs.size() == ds.graphs.size());
    for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
        CHECK(back.graphs[i].adjacency == ds.graphs[i].adjacency);
        CHECK(back.graphs[i].features == ds.graphs[i].features);
        CHECK(back.graphs[i].label == ds.graphs[i].label);
        CHECK(back.graphs[i].node_ids == ds.graphs[i].node_ids);
        CHECK(back.graphs[i].target_index == ds.graphs[i].target_index);
    }
    CHECK(dataset_fingerprint(back) == dataset_fingerprint(ds));
}

TEST_CASE("synthetic pattern dataset survives the round trip") {
    const SynthCorpus corpus = synth_tx_corpus(17, 3, 3);
    const GraphDataset ds = build_pattern_dataset(corpus.records, corpus.targets, 3,
                                                  EdgeWeightMode::LogAmount, 500, "synth");
    const std::string dir = "mcgc_test_tmp/synth_roundtrip";
    save_dataset(ds, dir);
    const GraphDataset back = load_dataset(dir);
    CHECK(dataset_fingerprint(back) == dataset_fingerprint(ds));
}

TEST_CASE("missing directory raises an I/O error") {
    CHECK_THROWS_AS(load_dataset("mcgc_test_tmp/never_saved"), IoError);
}

TEST_CASE("malformed graph file raises an I/O error naming the file") {
    const GraphDataset ds = sample_dataset();
    const std::string dir = "mcgc_test_tmp/corrupt";
    save_dataset(ds, dir);
    std::ofstream(fs::path(dir) / "graph_00001.json") << "{not json";
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("graph_00001.json"),
                         IoError);
}

TEST_CASE("manifest missing a required key raises a validation error") {
    const std::string dir = "mcgc_test_tmp/badmanifest";
    fs::create_directories(dir);
    std::ofstream(fs::path(dir) / "manifest.json") << "{\"name\": \"x\"}";
    CHECK_THROWS_AS(load_dataset(dir), ValidationError);
}

TEST_CASE("fingerprint reacts to any content change") {
    const GraphDataset ds = sample_dataset();
    const std::uint64_t base = dataset_fingerprint(ds);

    GraphDataset label_flip = ds;
    label_flip.graphs[0].label = 1;
    CHECK(dataset_fingerprint(label_flip) != base);

    GraphDataset entry_tweak = ds;
    entry_tweak.graphs[1].features(0, 0) = 1.0 + 1e-15;
    CHECK(dataset_fingerprint(entry_tweak) != base);

    GraphDataset renamed = ds;
    renamed.name = "sample2";
    CHECK(dataset_fingerprint(renamed) != base);

    CHECK(dataset_fingerprint_hex(ds).size() == 16);
}

TEST_SUITE_END();
