#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mcgc/graph.hpp"
#include "mcgc/matrix.hpp"

namespace mcgc {

/// One cleaned transaction row.
struct TxRecord {
    std::string from_addr;
    std::string to_addr;
    double amount = 0.0;        // nonnegative currency units
    std::int64_t timestamp = 0; // Unix seconds, positive
    bool operator==(const TxRecord&) const = default;
};

struct ParseResult {
    std::vector<TxRecord> records;
    std::size_t dropped_self_transfers = 0;
    std::size_t skipped_rows = 0;
    std::vector<std::string> row_errors; // "line N: reason" per skipped row
};

/// Reads a UTF-8 CSV whose header names the columns from,to,amount,timestamp
/// in any order (extra columns are ignored). Self-transfers are dropped and
/// counted; malformed rows are skipped, counted, and reported with their line
/// number. Missing file -> IoError; missing column -> ValidationError naming
/// the column.
ParseResult parse_tx_csv(const std::string& path);

/// All records between one unordered address pair collapsed into one edge.
/// "out" is the flow from the lexicographically smaller endpoint to the
/// larger one; "in" is the reverse direction.
struct MergedEdge {
    double total_amount_out = 0.0;
    double total_amount_in = 0.0;
    double mean_timestamp = 0.0; // arithmetic mean over all records, both directions
    std::size_t record_count = 0;
};

/// Key: (smaller endpoint, larger endpoint). Ordered map so iteration — and
/// everything derived from it — is deterministic.
using AddressPair = std::pair<std::string, std::string>;
using MergedEdgeMap = std::map<AddressPair, MergedEdge>;

MergedEdgeMap merge_multi_edges(const std::vector<TxRecord>& records);

enum class EdgeWeightMode {
    Binary,   // every merged edge weighs 1
    LogAmount // log(1 + max(out sum, in sum))
};

/// Induced subgraph over all addresses within breadth-first distance k_order
/// of the target. Nodes are ordered by (distance, address) so the target is
/// node 0; node_ids and target_index are set; features are left empty (width
/// 0) for build_node_features to fill. When the ball exceeds node_cap, the
/// closest nodes win (ties by address). Unknown target -> ValidationError.
Graph build_pattern_graph(const std::string& target, const MergedEdgeMap& edges,
                          int k_order, EdgeWeightMode mode = EdgeWeightMode::Binary,
                          std::size_t node_cap = 1000);

inline constexpr std::size_t kTxFeatureDim = 7;

/// Per-node descriptors from the merged edges that lie inside the graph:
/// [log1p(in amount), log1p(out amount), in-degree, out-degree, merged-edge
/// count, mean-timestamp offset from the target node in days, is-target].
/// A direction counts toward degree when its summed amount is positive.
Matrix build_node_features(const Graph& g, const MergedEdgeMap& edges);

/// Labeled synthetic corpus. Phishing targets (label 1) transact with a few
/// high-degree hubs; normal targets (label 0) with many low-activity peers.
struct SynthCorpus {
    std::vector<TxRecord> records;
    std::vector<std::pair<std::string, int>> targets; // address -> class label
};

/// Deterministic in `seed`: same seed, same corpus, byte for byte.
SynthCorpus synth_tx_corpus(std::uint64_t seed, std::size_t n_phishing,
                            std::size_t n_normal);

/// Full pipeline for a labeled target list: merge records, extract one
/// pattern graph per target, attach features and labels.
GraphDataset build_pattern_dataset(const std::vector<TxRecord>& records,
                                   const std::vector<std::pair<std::string, int>>& targets,
                                   int k_order, EdgeWeightMode mode,
                                   std::size_t node_cap, const std::string& name);

} // namespace mcgc
