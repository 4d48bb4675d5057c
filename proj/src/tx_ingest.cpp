#include "mcgc/tx_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <unordered_map>

#include "mcgc/errors.hpp"
#include "mcgc/rng.hpp"

namespace mcgc {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

bool parse_int64(const std::string& s, std::int64_t& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

} // namespace

ParseResult parse_tx_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open transaction file: " + path);

    std::string line;
    if (!std::getline(in, line))
        throw ValidationError("transaction file is empty (no header row): " + path);

    const std::vector<std::string> header = split_csv(line);
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw ValidationError("transaction file " + path + ": missing column '" +
                                  name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t col_from = column("from");
    const std::size_t col_to = column("to");
    const std::size_t col_amount = column("amount");
    const std::size_t col_ts = column("timestamp");

    ParseResult result;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv(line);

        auto reject = [&](const std::string& reason) {
            ++result.skipped_rows;
            result.row_errors.push_back("line " + std::to_string(line_no) + ": " + reason);
        };

        const std::size_t need =
            std::max({col_from, col_to, col_amount, col_ts}) + 1;
        if (fields.size() < need) {
            reject("expected at least " + std::to_string(need) + " fields, got " +
                   std::to_string(fields.size()));
            continue;
        }

        TxRecord rec;
        rec.from_addr = fields[col_from];
        rec.to_addr = fields[col_to];
        if (rec.from_addr.empty() || rec.to_addr.empty()) {
            reject("empty address");
            continue;
        }
        if (!parse_double(fields[col_amount], rec.amount) || !std::isfinite(rec.amount) ||
            rec.amount < 0.0) {
            reject("bad amount '" + fields[col_amount] + "'");
            continue;
        }
        if (!parse_int64(fields[col_ts], rec.timestamp) || rec.timestamp <= 0) {
            reject("bad timestamp '" + fields[col_ts] + "'");
            continue;
        }
        if (rec.from_addr == rec.to_addr) {
            ++result.dropped_self_transfers;
            continue;
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

MergedEdgeMap merge_multi_edges(const std::vector<TxRecord>& records) {
    struct Accum {
        MergedEdge edge;
        std::int64_t ts_sum = 0; // exact integer sum, divided once at the end
    };
    std::map<AddressPair, Accum> acc;
    for (const TxRecord& rec : records) {
        if (rec.from_addr == rec.to_addr)
            throw ValidationError("merge: self-transfer slipped past parsing: " +
                                  rec.from_addr);
        const bool forward = rec.from_addr < rec.to_addr;
        const AddressPair key = forward ? AddressPair{rec.from_addr, rec.to_addr}
                                        : AddressPair{rec.to_addr, rec.from_addr};
        Accum& a = acc[key];
        if (forward)
            a.edge.total_amount_out += rec.amount;
        else
            a.edge.total_amount_in += rec.amount;
        a.ts_sum += rec.timestamp;
        a.edge.record_count += 1;
    }

    MergedEdgeMap out;
    for (auto& [key, a] : acc) {
        a.edge.mean_timestamp =
            static_cast<double>(a.ts_sum) / static_cast<double>(a.edge.record_count);
        out.emplace(key, a.edge);
    }
    return out;
}

Graph build_pattern_graph(const std::string& target, const MergedEdgeMap& edges,
                          int k_order, EdgeWeightMode mode, std::size_t node_cap) {
    if (k_order < 0) throw ValidationError("pattern graph: k_order must be >= 0");
    if (node_cap < 1) throw ValidationError("pattern graph: node_cap must be >= 1");

    std::unordered_map<std::string, std::vector<std::string>> neighbors;
    for (const auto& [key, edge] : edges) {
        neighbors[key.first].push_back(key.second);
        neighbors[key.second].push_back(key.first);
    }
    if (!neighbors.count(target))
        throw ValidationError("pattern graph: unknown target address '" + target + "'");

    // Breadth-first ball of radius k_order around the target.
    std::unordered_map<std::string, int> dist;
    dist[target] = 0;
    std::deque<std::string> frontier{target};
    while (!frontier.empty()) {
        const std::string addr = std::move(frontier.front());
        frontier.pop_front();
        const int d = dist[addr];
        if (d == k_order) continue;
        for (const std::string& next : neighbors[addr]) {
            if (dist.emplace(next, d + 1).second) frontier.push_back(next);
        }
    }

    // Closest nodes first, ties broken by address, so the ordering (and the
    // cap cutoff) is deterministic and the target is always node 0.
    std::vector<std::pair<int, std::string>> ordered;
    ordered.reserve(dist.size());
    for (const auto& [addr, d] : dist) ordered.emplace_back(d, addr);
    std::sort(ordered.begin(), ordered.end());
    if (ordered.size() > node_cap) ordered.resize(node_cap);

    const std::size_t n = ordered.size();
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        ids[i] = ordered[i].second;
        index.emplace(ids[i], i);
    }

    Graph g;
    g.adjacency.assign(n, n);
    for (const auto& [key, edge] : edges) {
        auto it_a = index.find(key.first);
        auto it_b = index.find(key.second);
        if (it_a == index.end() || it_b == index.end()) continue;
        const double w =
            mode == EdgeWeightMode::Binary
                ? 1.0
                : std::log1p(std::max(edge.total_amount_out, edge.total_amount_in));
        g.adjacency(it_a->second, it_b->second) = w;
        g.adjacency(it_b->second, it_a->second) = w;
    }
    g.features.assign(n, 0);
    g.node_ids = std::move(ids);
    g.target_index = 0;
    return g;
}

Matrix build_node_features(const Graph& g, const MergedEdgeMap& edges) {
    if (!g.node_ids || !g.target_index)
        throw ValidationError("node features: graph carries no addresses");
    const std::vector<std::string>& ids = *g.node_ids;
    const std::size_t n = g.num_nodes();
    if (ids.size() != n)
        throw ValidationError("node features: node_ids length does not match node count");

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index.emplace(ids[i], i);

    std::vector<double> amount_in(n, 0.0), amount_out(n, 0.0);
    std::vector<double> deg_in(n, 0.0), deg_out(n, 0.0), deg_merged(n, 0.0);
    std::vector<double> ts_sum(n, 0.0), ts_count(n, 0.0);

    // Only edges with both endpoints inside the graph contribute.
    for (const auto& [key, edge] : edges) {
        auto it_a = index.find(key.first);
        auto it_b = index.find(key.second);
        if (it_a == index.end() || it_b == index.end()) continue;
        const std::size_t a = it_a->second;
        const std::size_t b = it_b->second;

        amount_out[a] += edge.total_amount_out; // a is the smaller endpoint
        amount_in[b] += edge.total_amount_out;
        amount_out[b] += edge.total_amount_in;
        amount_in[a] += edge.total_amount_in;
        if (edge.total_amount_out > 0.0) {
            deg_out[a] += 1.0;
            deg_in[b] += 1.0;
        }
        if (edge.total_amount_in > 0.0) {
            deg_out[b] += 1.0;
            deg_in[a] += 1.0;
        }
        deg_merged[a] += 1.0;
        deg_merged[b] += 1.0;
        ts_sum[a] += edge.mean_timestamp;
        ts_sum[b] += edge.mean_timestamp;
        ts_count[a] += 1.0;
        ts_count[b] += 1.0;
    }

    auto mean_ts = [&](std::size_t i) {
        return ts_count[i] > 0.0 ? ts_sum[i] / ts_count[i] : 0.0;
    };
    const std::size_t t = static_cast<std::size_t>(*g.target_index);
    const double target_ts = mean_ts(t);
    constexpr double kSecondsPerDay = 86400.0;

    Matrix features(n, kTxFeatureDim);
    for (std::size_t i = 0; i < n; ++i) {
        features(i, 0) = std::log1p(amount_in[i]);
        features(i, 1) = std::log1p(amount_out[i]);
        features(i, 2) = deg_in[i];
        features(i, 3) = deg_out[i];
        features(i, 4) = deg_merged[i];
        features(i, 5) =
            ts_count[i] > 0.0 ? (mean_ts(i) - target_ts) / kSecondsPerDay : 0.0;
        features(i, 6) = i == t ? 1.0 : 0.0;
    }
    return features;
}

namespace {

/// Year of 2023 Unix seconds; any fixed window works, it only has to be stable.
constexpr std::int64_t kTsStart = 1672531200;
constexpr std::int64_t kTsSpan = 365LL * 86400LL;

std::int64_t draw_timestamp(rng::Engine& eng) {
    return kTsStart +
           static_cast<std::int64_t>(rng::uniform_index(eng, static_cast<std::uint64_t>(kTsSpan)));
}

double draw_amount(rng::Engine& eng) {
    // Heavy-tailed positive amounts, median around 0.4 units.
    return rng::log_normal(eng, -1.0, 1.5);
}

void add_record(SynthCorpus& corpus, rng::Engine& eng, const std::string& from,
                const std::string& to) {
    corpus.records.push_back({from, to, draw_amount(eng), draw_timestamp(eng)});
}

/// Random direction between two parties.
void add_record_either_way(SynthCorpus& corpus, rng::Engine& eng, const std::string& a,
                           const std::string& b) {
    if (rng::uniform_index(eng, 2) == 0)
        add_record(corpus, eng, a, b);
    else
        add_record(corpus, eng, b, a);
}

} // namespace

SynthCorpus synth_tx_corpus(std::uint64_t seed, std::size_t n_phishing,
                            std::size_t n_normal) {
    rng::Engine eng(seed);
    SynthCorpus corpus;

    // Phishing pattern: victims funnel money to the target through a small
    // set of counterparties, each of which is itself a busy hub.
    for (std::size_t i = 0; i < n_phishing; ++i) {
        const std::string target = "phish_" + std::to_string(i);
        corpus.targets.emplace_back(target, 1);
        const std::size_t n_direct = 2 + rng::uniform_index(eng, 4); // 2..5
        for (std::size_t j = 0; j < n_direct; ++j) {
            const std::string hub = target + "_hub_" + std::to_string(j);
            add_record(corpus, eng, hub, target);
            const std::size_t n_leaf = 20 + rng::uniform_index(eng, 41); // 20..60
            for (std::size_t k = 0; k < n_leaf; ++k) {
                const std::string leaf = hub + "_n" + std::to_string(k);
                add_record_either_way(corpus, eng, hub, leaf);
            }
        }
    }

    // Normal pattern: many direct counterparties, each with little activity
    // of its own.
    for (std::size_t i = 0; i < n_normal; ++i) {
        const std::string target = "user_" + std::to_string(i);
        corpus.targets.emplace_back(target, 0);
        const std::size_t n_direct = 8 + rng::uniform_index(eng, 18); // 8..25
        for (std::size_t j = 0; j < n_direct; ++j) {
            const std::string peer = target + "_peer_" + std::to_string(j);
            add_record_either_way(corpus, eng, target, peer);
            const std::size_t n_second = rng::uniform_index(eng, 4); // 0..3
            for (std::size_t k = 0; k < n_second; ++k) {
                const std::string leaf = peer + "_n" + std::to_string(k);
                add_record_either_way(corpus, eng, peer, leaf);
            }
        }
    }
    return corpus;
}

GraphDataset build_pattern_dataset(const std::vector<TxRecord>& records,
                                   const std::vector<std::pair<std::string, int>>& targets,
                                   int k_order, EdgeWeightMode mode,
                                   std::size_t node_cap, const std::string& name) {
    const MergedEdgeMap edges = merge_multi_edges(records);
    GraphDataset ds;
    ds.name = name;
    int max_label = 1;
    for (const auto& [address, label] : targets) {
        if (label < 0)
            throw ValidationError("pattern dataset: negative label for target '" +
                                  address + "'");
        max_label = std::max(max_label, label);
        Graph g = build_pattern_graph(address, edges, k_order, mode, node_cap);
        g.features = build_node_features(g, edges);
        g.label = label;
        validate_graph(g);
        ds.graphs.push_back(std::move(g));
    }
    ds.num_classes = max_label + 1;
    validate_dataset(ds);
    return ds;
}

} // namespace mcgc
