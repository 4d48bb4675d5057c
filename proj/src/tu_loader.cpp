#include "mcgc/tu_loader.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "mcgc/errors.hpp"

namespace mcgc {

namespace fs = std::filesystem;

namespace {

struct NumberedLine {
    std::size_t line_no;
    std::string text;
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Non-empty lines with their physical line numbers, for error reporting.
std::vector<NumberedLine> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<NumberedLine> lines;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string text = trim(raw);
        if (!text.empty()) lines.push_back({line_no, std::move(text)});
    }
    return lines;
}

std::int64_t parse_int(const std::string& s, const fs::path& path, std::size_t line_no) {
    std::int64_t value = 0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ValidationError(path.string() + " line " + std::to_string(line_no) +
                              ": expected an integer, got '" + s + "'");
    return value;
}

/// "i, j" or "i,j" -> two integers.
std::pair<std::int64_t, std::int64_t> parse_pair(const NumberedLine& line,
                                                 const fs::path& path) {
    const std::size_t comma = line.text.find(',');
    if (comma == std::string::npos)
        throw ValidationError(path.string() + " line " + std::to_string(line.line_no) +
                              ": expected 'i, j'");
    const std::int64_t a = parse_int(trim(line.text.substr(0, comma)), path, line.line_no);
    const std::int64_t b = parse_int(trim(line.text.substr(comma + 1)), path, line.line_no);
    return {a, b};
}

/// Sorted-unique remap: arbitrary integer labels -> 0-based contiguous.
std::map<std::int64_t, int> contiguous_remap(const std::vector<std::int64_t>& values) {
    std::vector<std::int64_t> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::map<std::int64_t, int> remap;
    for (std::size_t i = 0; i < sorted.size(); ++i)
        remap[sorted[i]] = static_cast<int>(i);
    return remap;
}

} // namespace

GraphDataset load_tu_dataset(const std::string& dir, const std::string& name) {
    const fs::path base = fs::path(dir);
    const fs::path indicator_path = base / (name + "_graph_indicator.txt");
    const fs::path edges_path = base / (name + "_A.txt");
    const fs::path graph_labels_path = base / (name + "_graph_labels.txt");
    const fs::path node_labels_path = base / (name + "_node_labels.txt");

    // Node -> graph membership. Node ids are implicit 1-based line numbers.
    const std::vector<NumberedLine> indicator_lines = read_lines(indicator_path);
    const std::size_t num_nodes = indicator_lines.size();
    if (num_nodes == 0)
        throw ValidationError(indicator_path.string() + ": no nodes listed");

    std::vector<std::int64_t> node_graph(num_nodes);
    std::int64_t max_graph_id = 0;
    for (std::size_t i = 0; i < num_nodes; ++i) {
        const std::int64_t gid =
            parse_int(indicator_lines[i].text, indicator_path, indicator_lines[i].line_no);
        if (gid < 1)
            throw ValidationError(indicator_path.string() + " line " +
                                  std::to_string(indicator_lines[i].line_no) +
                                  ": graph ids are 1-based, got " + std::to_string(gid));
        node_graph[i] = gid;
        max_graph_id = std::max(max_graph_id, gid);
    }
    const std::size_t num_graphs = static_cast<std::size_t>(max_graph_id);

    // Local node index within its graph, assigned in global-id order so the
    // result is deterministic.
    std::vector<std::size_t> local_index(num_nodes);
    std::vector<std::size_t> graph_size(num_graphs, 0);
    for (std::size_t i = 0; i < num_nodes; ++i) {
        const std::size_t g = static_cast<std::size_t>(node_graph[i]) - 1;
        local_index[i] = graph_size[g]++;
    }
    for (std::size_t g = 0; g < num_graphs; ++g)
        if (graph_size[g] == 0)
            throw ValidationError(indicator_path.string() + ": graph id " +
                                  std::to_string(g + 1) + " has no nodes");

    // Graph labels, remapped to contiguous classes.
    const std::vector<NumberedLine> label_lines = read_lines(graph_labels_path);
    if (label_lines.size() != num_graphs)
        throw ValidationError(graph_labels_path.string() + ": expected " +
                              std::to_string(num_graphs) + " labels, found " +
                              std::to_string(label_lines.size()));
    std::vector<std::int64_t> raw_labels(num_graphs);
    for (std::size_t g = 0; g < num_graphs; ++g)
        raw_labels[g] = parse_int(label_lines[g].text, graph_labels_path,
                                  label_lines[g].line_no);
    const std::map<std::int64_t, int> label_remap = contiguous_remap(raw_labels);

    GraphDataset ds;
    ds.name = name;
    ds.num_classes = static_cast<int>(label_remap.size());
    ds.graphs.resize(num_graphs);
    for (std::size_t g = 0; g < num_graphs; ++g) {
        ds.graphs[g].adjacency.assign(graph_size[g], graph_size[g]);
        ds.graphs[g].label = label_remap.at(raw_labels[g]);
    }

    // Edges: 1-based global pairs, both endpoints must share a graph.
    for (const NumberedLine& line : read_lines(edges_path)) {
        const auto [u, v] = parse_pair(line, edges_path);
        auto check_node = [&](std::int64_t id) {
            if (id < 1 || static_cast<std::size_t>(id) > num_nodes)
                throw ValidationError(edges_path.string() + " line " +
                                      std::to_string(line.line_no) + ": node id " +
                                      std::to_string(id) + " out of range [1, " +
                                      std::to_string(num_nodes) + "]");
            return static_cast<std::size_t>(id) - 1;
        };
        const std::size_t a = check_node(u);
        const std::size_t b = check_node(v);
        if (node_graph[a] != node_graph[b])
            throw ValidationError(edges_path.string() + " line " +
                                  std::to_string(line.line_no) + ": edge (" +
                                  std::to_string(u) + ", " + std::to_string(v) +
                                  ") crosses graphs " + std::to_string(node_graph[a]) +
                                  " and " + std::to_string(node_graph[b]));
        Matrix& adj = ds.graphs[static_cast<std::size_t>(node_graph[a]) - 1].adjacency;
        adj(local_index[a], local_index[b]) = 1.0;
        adj(local_index[b], local_index[a]) = 1.0;
    }

    // Features: one-hot node labels when available, else degree one-hot.
    if (fs::exists(node_labels_path)) {
        const std::vector<NumberedLine> node_label_lines = read_lines(node_labels_path);
        if (node_label_lines.size() != num_nodes)
            throw ValidationError(node_labels_path.string() + ": expected " +
                                  std::to_string(num_nodes) + " labels, found " +
                                  std::to_string(node_label_lines.size()));
        std::vector<std::int64_t> raw(num_nodes);
        for (std::size_t i = 0; i < num_nodes; ++i)
            raw[i] = parse_int(node_label_lines[i].text, node_labels_path,
                               node_label_lines[i].line_no);
        const std::map<std::int64_t, int> remap = contiguous_remap(raw);
        const std::size_t width = remap.size();
        for (std::size_t g = 0; g < num_graphs; ++g)
            ds.graphs[g].features.assign(graph_size[g], width);
        for (std::size_t i = 0; i < num_nodes; ++i) {
            Graph& graph = ds.graphs[static_cast<std::size_t>(node_graph[i]) - 1];
            graph.features(local_index[i], static_cast<std::size_t>(remap.at(raw[i]))) = 1.0;
        }
    } else {
        for (Graph& graph : ds.graphs) {
            const std::size_t n = graph.num_nodes();
            graph.features.assign(n, kDegreeFeatureDim);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t degree = 0;
                for (std::size_t j = 0; j < n; ++j)
                    if (graph.adjacency(i, j) != 0.0) ++degree;
                graph.features(i, std::min(degree, kDegreeFeatureDim - 1)) = 1.0;
            }
        }
    }

    for (const Graph& graph : ds.graphs) validate_graph(graph);
    validate_dataset(ds);
    return ds;
}

DatasetStats dataset_stats(const GraphDataset& ds) {
    if (ds.graphs.empty()) throw ValidationError("dataset stats: empty dataset");
    DatasetStats stats;
    stats.num_graphs = ds.graphs.size();
    stats.num_classes = ds.num_classes;
    double node_sum = 0.0;
    double edge_sum = 0.0;
    for (const Graph& g : ds.graphs) {
        node_sum += static_cast<double>(g.num_nodes());
        std::size_t edges = 0;
        for (std::size_t i = 0; i < g.num_nodes(); ++i) {
            if (g.adjacency(i, i) != 0.0) ++edges; // self-loop counts once
            for (std::size_t j = i + 1; j < g.num_nodes(); ++j)
                if (g.adjacency(i, j) != 0.0) ++edges;
        }
        edge_sum += static_cast<double>(edges);
    }
    stats.mean_nodes = node_sum / static_cast<double>(stats.num_graphs);
    stats.mean_edges = edge_sum / static_cast<double>(stats.num_graphs);
    return stats;
}

} // namespace mcgc
