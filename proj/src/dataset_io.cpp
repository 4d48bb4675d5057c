#include "mcgc/dataset_io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "mcgc/errors.hpp"

namespace mcgc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string graph_filename(std::size_t index) {
    std::ostringstream name;
    name << "graph_" << std::setw(5) << std::setfill('0') << index << ".json";
    return name.str();
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& rows, const std::string& what) {
    if (!rows.is_array())
        throw ValidationError(what + ": expected an array of rows");
    const std::size_t n_rows = rows.size();
    std::size_t n_cols = 0;
    if (n_rows > 0) {
        if (!rows[0].is_array()) throw ValidationError(what + ": rows must be arrays");
        n_cols = rows[0].size();
    }
    Matrix m(n_rows, n_cols);
    for (std::size_t i = 0; i < n_rows; ++i) {
        const json& row = rows[i];
        if (!row.is_array() || row.size() != n_cols)
            throw ValidationError(what + ": ragged row " + std::to_string(i));
        for (std::size_t j = 0; j < n_cols; ++j) {
            if (!row[j].is_number())
                throw ValidationError(what + ": non-numeric entry at (" +
                                      std::to_string(i) + ", " + std::to_string(j) + ")");
            m(i, j) = row[j].get<double>();
        }
    }
    return m;
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(1) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace

void save_dataset(const GraphDataset& ds, const std::string& dir) {
    validate_dataset(ds);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

    json manifest;
    manifest["name"] = ds.name;
    manifest["num_classes"] = ds.num_classes;
    manifest["num_graphs"] = ds.graphs.size();
    write_json_file(fs::path(dir) / "manifest.json", manifest);

    for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
        const Graph& g = ds.graphs[i];
        json j;
        j["label"] = g.label;
        j["adjacency"] = matrix_to_json(g.adjacency);
        j["features"] = matrix_to_json(g.features);
        if (g.node_ids) j["node_ids"] = *g.node_ids;
        if (g.target_index) j["target_index"] = *g.target_index;
        write_json_file(fs::path(dir) / graph_filename(i), j);
    }
}

GraphDataset load_dataset(const std::string& dir) {
    const json manifest = read_json_file(fs::path(dir) / "manifest.json");
    if (!manifest.contains("name") || !manifest.contains("num_classes") ||
        !manifest.contains("num_graphs"))
        throw ValidationError("manifest.json in " + dir +
                              ": need name, num_classes, num_graphs");

    GraphDataset ds;
    ds.name = manifest["name"].get<std::string>();
    ds.num_classes = manifest["num_classes"].get<int>();
    const std::size_t n = manifest["num_graphs"].get<std::size_t>();

    for (std::size_t i = 0; i < n; ++i) {
        const fs::path path = fs::path(dir) / graph_filename(i);
        const json j = read_json_file(path);
        Graph g;
        if (!j.contains("label") || !j.contains("adjacency") || !j.contains("features"))
            throw ValidationError(path.string() + ": need label, adjacency, features");
        g.label = j["label"].get<int>();
        g.adjacency = matrix_from_json(j["adjacency"], path.string() + " adjacency");
        g.features = matrix_from_json(j["features"], path.string() + " features");
        if (j.contains("node_ids"))
            g.node_ids = j["node_ids"].get<std::vector<std::string>>();
        if (j.contains("target_index")) g.target_index = j["target_index"].get<int>();
        validate_graph(g);
        ds.graphs.push_back(std::move(g));
    }
    validate_dataset(ds);
    return ds;
}

namespace {

struct Fnv1a {
    std::uint64_t state = 1469598103934665603ULL;

    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state ^= p[i];
            state *= 1099511628211ULL;
        }
    }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
    void matrix(const Matrix& m) {
        u64(m.rows());
        u64(m.cols());
        for (std::size_t i = 0; i < m.size(); ++i) f64(m.data()[i]);
    }
};

} // namespace

std::uint64_t dataset_fingerprint(const GraphDataset& ds) {
    Fnv1a h;
    h.str(ds.name);
    h.u64(static_cast<std::uint64_t>(ds.num_classes));
    h.u64(ds.graphs.size());
    for (const Graph& g : ds.graphs) {
        h.u64(static_cast<std::uint64_t>(g.label));
        h.matrix(g.adjacency);
        h.matrix(g.features);
        h.u64(g.node_ids ? 1 : 0);
        if (g.node_ids) {
            h.u64(g.node_ids->size());
            for (const std::string& id : *g.node_ids) h.str(id);
        }
        h.u64(g.target_index ? 1 : 0);
        if (g.target_index) h.u64(static_cast<std::uint64_t>(*g.target_index));
    }
    return h.state;
}

std::string dataset_fingerprint_hex(const GraphDataset& ds) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << dataset_fingerprint(ds);
    return out.str();
}

} // namespace mcgc
