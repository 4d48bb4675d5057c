#pragma once

#include <cstdint>
#include <string>

#include "mcgc/graph.hpp"

namespace mcgc {

/// Writes `dir/manifest.json` plus one `graph_NNNNN.json` per graph. The
/// directory is created if needed; existing files are overwritten. Doubles
/// survive the round trip bit for bit.
void save_dataset(const GraphDataset& ds, const std::string& dir);

/// Inverse of save_dataset. Missing or unreadable files -> IoError; malformed
/// JSON -> IoError; structurally invalid content -> ValidationError.
GraphDataset load_dataset(const std::string& dir);

/// Order-sensitive FNV-1a hash over the full dataset content (labels, shapes,
/// raw double bits, addresses). Two datasets with equal fingerprints loaded
/// through this module are byte-identical for every consumer downstream.
std::uint64_t dataset_fingerprint(const GraphDataset& ds);

/// Fingerprint as fixed-width lowercase hex, for manifests and logs.
std::string dataset_fingerprint_hex(const GraphDataset& ds);

} // namespace mcgc
