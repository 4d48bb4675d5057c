#pragma once

#include <string>

#include "mcgc/graph.hpp"

namespace mcgc {

/// Loads a benchmark dataset stored in the common community text format:
/// `NAME_A.txt` (comma-separated 1-based node pairs), `NAME_graph_indicator.txt`
/// (one graph id per node), `NAME_graph_labels.txt` (one class per graph), and
/// optionally `NAME_node_labels.txt`. Class labels are remapped to 0-based
/// contiguous values in sorted order. Node features are the one-hot node label
/// when the file exists, otherwise a one-hot of the node degree capped at 30.
/// Adjacency is binary and symmetric. Missing mandatory file -> IoError naming
/// it; an edge whose endpoints live in different graphs -> ValidationError
/// with the offending line number.
GraphDataset load_tu_dataset(const std::string& dir, const std::string& name);

/// Degree one-hot width for label-free datasets: degrees 0..30 plus the cap.
inline constexpr std::size_t kDegreeFeatureDim = 31;

struct DatasetStats {
    std::size_t num_graphs = 0;
    int num_classes = 0;
    double mean_nodes = 0.0;
    double mean_edges = 0.0; // each symmetric pair counted once
};

/// Empty dataset -> ValidationError.
DatasetStats dataset_stats(const GraphDataset& ds);

} // namespace mcgc
