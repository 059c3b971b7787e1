#include "gmacn/spatial_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "gmacn/errors.hpp"

namespace gmacn {

namespace {

ElectrodeGraph make_graph(Matrix adjacency, GraphStrategy strategy, double parameter,
                          const Montage& m) {
    ElectrodeGraph g;
    g.normalized = normalize_adjacency(adjacency);
    g.adjacency = std::move(adjacency);
    g.strategy = strategy;
    g.parameter = parameter;
    g.montage_name = m.name();
    g.montage_hash = m.hash();
    return g;
}

}  // namespace

std::string ElectrodeGraph::strategy_str() const {
    return strategy == GraphStrategy::kThreshold ? "threshold" : "topk";
}

std::vector<double> ElectrodeGraph::degrees() const {
    const std::size_t n = adjacency.rows();
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) deg[i] += adjacency(i, j);
    return deg;
}

Matrix pairwise_distances(const Montage& m) {
    const std::size_t n = m.count();
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dist = m.distance(i, j);
            d(i, j) = dist;
            d(j, i) = dist;
        }
    }
    return d;
}

ElectrodeGraph build_threshold(const Montage& m, double t) {
    if (!(t > 0.0)) {
        throw ParamError("build_threshold: threshold must be > 0, got " + std::to_string(t));
    }
    const std::size_t n = m.count();
    const Matrix d = pairwise_distances(m);
    Matrix e(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (d(i, j) < t) {
                const double w = 1.0 / (1.0 + d(i, j) / t);
                e(i, j) = w;
                e(j, i) = w;
            }
        }
    }
    return make_graph(std::move(e), GraphStrategy::kThreshold, t, m);
}

ElectrodeGraph build_topk(const Montage& m, std::size_t k) {
    const std::size_t n = m.count();
    if (k < 1 || k > n - 1) {
        throw ParamError("build_topk: k must be in [1, " + std::to_string(n - 1) + "], got " +
                         std::to_string(k));
    }
    const Matrix d = pairwise_distances(m);
    Matrix e(n, n);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order.resize(0);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        // Distance ties break toward the lower montage ordinal.
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return d(i, a) < d(i, b); });
        for (std::size_t r = 1; r <= k; ++r) {
            const std::size_t j = order[r - 1];
            const double w = 1.0 / (1.0 + static_cast<double>(r) / static_cast<double>(k));
            e(i, j) = std::max(e(i, j), w);
            e(j, i) = std::max(e(j, i), w);  // symmetrize by elementwise max
        }
    }
    return make_graph(std::move(e), GraphStrategy::kTopK, static_cast<double>(k), m);
}

Matrix normalize_adjacency(const Matrix& adjacency) {
    if (adjacency.rows() != adjacency.cols()) {
        throw ShapeError("normalize_adjacency: adjacency must be square, got " +
                         adjacency.shape_str());
    }
    const std::size_t n = adjacency.rows();
    std::vector<double> inv_sqrt_deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 1.0;  // self-loop
        for (std::size_t j = 0; j < n; ++j) deg += adjacency(i, j);
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    Matrix norm(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double e = adjacency(i, j) + (i == j ? 1.0 : 0.0);
            const double v = e * (inv_sqrt_deg[i] * inv_sqrt_deg[j]);
            norm(i, j) = v;
            norm(j, i) = v;
        }
    }
    return norm;
}

void save_graph(const ElectrodeGraph& g, const std::string& prefix) {
    const std::string csv_path = prefix + ".csv";
    std::ofstream csv(csv_path);
    if (!csv) {
        throw IoError("save_graph: cannot write \"" + csv_path + "\"");
    }
    csv << "i,j,weight\n";
    char buf[40];
    const std::size_t n = g.adjacency.rows();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (g.adjacency(i, j) == 0.0) continue;
            std::snprintf(buf, sizeof(buf), "%.17g", g.adjacency(i, j));
            csv << i << ',' << j << ',' << buf << '\n';
        }
    }
    csv.close();

    nlohmann::json side;
    side["strategy"] = g.strategy_str();
    side["parameter"] = g.parameter;
    side["montage_name"] = g.montage_name;
    side["montage_hash"] = g.montage_hash;
    side["n_electrodes"] = n;
    std::ofstream js(prefix + ".json");
    if (!js) {
        throw IoError("save_graph: cannot write \"" + prefix + ".json\"");
    }
    js << side.dump(2) << '\n';
}

ElectrodeGraph load_graph(const std::string& prefix) {
    std::ifstream js(prefix + ".json");
    if (!js) {
        throw IoError("load_graph: cannot open \"" + prefix + ".json\"");
    }
    nlohmann::json side;
    try {
        js >> side;
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError("load_graph: bad sidecar \"" + prefix + ".json\": " + ex.what());
    }

    ElectrodeGraph g;
    try {
        const std::string strategy = side.at("strategy").get<std::string>();
        if (strategy == "threshold") {
            g.strategy = GraphStrategy::kThreshold;
        } else if (strategy == "topk") {
            g.strategy = GraphStrategy::kTopK;
        } else {
            throw FormatError("load_graph: unknown strategy \"" + strategy + "\"");
        }
        g.parameter = side.at("parameter").get<double>();
        g.montage_name = side.at("montage_name").get<std::string>();
        g.montage_hash = side.at("montage_hash").get<std::string>();
        const std::size_t n = side.at("n_electrodes").get<std::size_t>();
        g.adjacency = Matrix(n, n);
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError("load_graph: bad sidecar \"" + prefix + ".json\": " + ex.what());
    }

    std::ifstream csv(prefix + ".csv");
    if (!csv) {
        throw IoError("load_graph: cannot open \"" + prefix + ".csv\"");
    }
    std::string line;
    if (!std::getline(csv, line) || (line != "i,j,weight" && line != "i,j,weight\r")) {
        throw FormatError("load_graph: \"" + prefix + ".csv\" line 1: expected header i,j,weight");
    }
    std::size_t lineno = 1;
    const std::size_t n = g.adjacency.rows();
    while (std::getline(csv, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::size_t i = 0, j = 0;
        double w = 0.0;
        char c1 = 0, c2 = 0;
        if (!(ss >> i >> c1 >> j >> c2 >> w) || c1 != ',' || c2 != ',') {
            throw FormatError("load_graph: \"" + prefix + ".csv\" line " +
                              std::to_string(lineno) + ": malformed row");
        }
        if (i >= n || j >= n || i >= j) {
            throw FormatError("load_graph: \"" + prefix + ".csv\" line " +
                              std::to_string(lineno) + ": indices out of range");
        }
        g.adjacency(i, j) = w;
        g.adjacency(j, i) = w;
    }
    g.normalized = normalize_adjacency(g.adjacency);
    return g;
}

}  // namespace gmacn
