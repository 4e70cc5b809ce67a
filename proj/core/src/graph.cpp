#include "flowcast/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

#include "flowcast/data.hpp"
#include "flowcast/rng.hpp"

namespace flowcast {

void topology::validate() const {
    const std::size_t n = node_names.size();
    if (n == 0)
        throw config_error("topology: must have at least one node");
    std::set<std::string> seen;
    for (const auto& name : node_names) {
        if (name.empty())
            throw config_error("topology: empty node name");
        if (!seen.insert(name).second)
            throw config_error("topology: duplicate node name '" + name + "'");
    }
    for (const auto& e : edges) {
        if (e.from >= n || e.to >= n)
            throw config_error("topology: edge (" + std::to_string(e.from) + ", " +
                               std::to_string(e.to) + ") out of range for " + std::to_string(n) +
                               " nodes");
        if (e.from == e.to)
            throw config_error("topology: self-loop edge at node " + std::to_string(e.from));
        if (e.weight < 0.0)
            throw config_error("topology: negative edge weight on (" + std::to_string(e.from) +
                               ", " + std::to_string(e.to) + ")");
    }
    if (distances) {
        if (distances->rows() != n || distances->cols() != n)
            throw config_error("topology: distance matrix is " + distances->shape_str() +
                               ", expected " + std::to_string(n) + "x" + std::to_string(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if ((*distances)(i, j) < 0.0)
                    throw config_error("topology: negative distance at (" + std::to_string(i) +
                                       ", " + std::to_string(j) + ")");
    }
}

tensor topology::edge_adjacency() const {
    const std::size_t n = node_count();
    tensor a(n, n);
    for (const auto& e : edges) {
        a(e.from, e.to) = std::max(a(e.from, e.to), e.weight);
        a(e.to, e.from) = std::max(a(e.to, e.from), e.weight);
    }
    return a;
}

std::vector<std::vector<std::size_t>> topology::neighbor_lists() const {
    std::vector<std::set<std::size_t>> sets(node_count());
    for (const auto& e : edges) {
        sets[e.from].insert(e.to);
        sets[e.to].insert(e.from);
    }
    std::vector<std::vector<std::size_t>> out(node_count());
    for (std::size_t i = 0; i < sets.size(); ++i)
        out[i].assign(sets[i].begin(), sets[i].end());
    return out;
}

topology load_topology_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("topology: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("topology: parse error in '" + path + "': " + e.what());
    }
    topology topo;
    if (!j.contains("nodes") || !j["nodes"].is_array())
        throw config_error("topology: '" + path + "' missing \"nodes\" array");
    for (const auto& v : j["nodes"])
        topo.node_names.push_back(v.get<std::string>());
    if (j.contains("edges")) {
        for (const auto& e : j["edges"]) {
            if (!e.is_array() || e.size() < 2 || e.size() > 3)
                throw config_error("topology: edges must be [i, j] or [i, j, weight]");
            edge ed;
            ed.from = e[0].get<std::size_t>();
            ed.to = e[1].get<std::size_t>();
            ed.weight = e.size() == 3 ? e[2].get<double>() : 1.0;
            topo.edges.push_back(ed);
        }
    }
    if (j.contains("distances") && !j["distances"].is_null()) {
        const auto& d = j["distances"];
        const std::size_t n = topo.node_names.size();
        if (!d.is_array() || d.size() != n)
            throw config_error("topology: distances must be an NxN array");
        tensor dist(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            if (!d[i].is_array() || d[i].size() != n)
                throw config_error("topology: distances must be an NxN array");
            for (std::size_t k = 0; k < n; ++k)
                dist(i, k) = d[i][k].get<double>();
        }
        topo.distances = std::move(dist);
    }
    topo.validate();
    return topo;
}

void save_topology_json(const topology& topo, const std::string& path) {
    topo.validate();
    nlohmann::json j;
    j["nodes"] = topo.node_names;
    auto& edges = j["edges"] = nlohmann::json::array();
    for (const auto& e : topo.edges)
        edges.push_back({e.from, e.to, e.weight});
    if (topo.distances) {
        auto& d = j["distances"] = nlohmann::json::array();
        for (std::size_t i = 0; i < topo.distances->rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t k = 0; k < topo.distances->cols(); ++k)
                row.push_back((*topo.distances)(i, k));
            d.push_back(std::move(row));
        }
    }
    std::ofstream out(path);
    if (!out)
        throw config_error("topology: cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

namespace {

// All-pairs hop distances by BFS; unreachable pairs get n (finite so the
// Gaussian kernel can still cut them off).
tensor hop_distances(const topology& topo) {
    const std::size_t n = topo.node_count();
    const auto neighbors = topo.neighbor_lists();
    tensor d(n, n, static_cast<double>(n));
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<std::size_t> dist(n, std::numeric_limits<std::size_t>::max());
        std::deque<std::size_t> q{s};
        dist[s] = 0;
        while (!q.empty()) {
            std::size_t u = q.front();
            q.pop_front();
            for (std::size_t v : neighbors[u]) {
                if (dist[v] != std::numeric_limits<std::size_t>::max()) continue;
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
        for (std::size_t t = 0; t < n; ++t)
            if (dist[t] != std::numeric_limits<std::size_t>::max())
                d(s, t) = static_cast<double>(dist[t]);
    }
    return d;
}

} // namespace

topology make_ring_topology(std::size_t n) {
    if (n == 0)
        throw config_error("make_ring_topology: n must be >= 1");
    topology topo;
    for (std::size_t i = 0; i < n; ++i)
        topo.node_names.push_back("n" + std::to_string(i));
    if (n > 1) {
        for (std::size_t i = 0; i + 1 < n; ++i)
            topo.edges.push_back({i, i + 1, 1.0});
        if (n > 2)
            topo.edges.push_back({n - 1, 0, 1.0});
    }
    topo.distances = hop_distances(topo);
    topo.validate();
    return topo;
}

std::string to_string(adjacency_method m) {
    switch (m) {
    case adjacency_method::distance: return "distance";
    case adjacency_method::correlation: return "correlation";
    case adjacency_method::knn: return "knn";
    case adjacency_method::adaptive: return "adaptive";
    case adjacency_method::learnable: return "learnable";
    case adjacency_method::explicit_matrix: return "explicit";
    }
    return "unknown";
}

adjacency_method adjacency_method_from_string(const std::string& s) {
    if (s == "distance") return adjacency_method::distance;
    if (s == "correlation") return adjacency_method::correlation;
    if (s == "knn") return adjacency_method::knn;
    if (s == "adaptive") return adjacency_method::adaptive;
    if (s == "learnable") return adjacency_method::learnable;
    if (s == "explicit") return adjacency_method::explicit_matrix;
    throw config_error("unknown adjacency method '" + s +
                       "' (expected distance|correlation|knn|adaptive|learnable|explicit)");
}

void adjacency_matrix::validate() const {
    if (a.rows() != a.cols())
        throw dim_error("adjacency: matrix must be square, got " + a.shape_str());
    const std::size_t n = a.rows();
    const bool expect_symmetric = method != adjacency_method::learnable &&
                                  method != adjacency_method::adaptive;
    for (std::size_t i = 0; i < n; ++i) {
        if (a(i, i) != 0.0)
            throw data_error("adjacency: nonzero diagonal at node " + std::to_string(i));
        for (std::size_t j = 0; j < n; ++j) {
            if (a(i, j) < 0.0)
                throw data_error("adjacency: negative entry at (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ")");
            if (expect_symmetric && a(i, j) != a(j, i))
                throw data_error("adjacency: asymmetric entry at (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ")");
        }
    }
}

normalized_adjacency normalize(const adjacency_matrix& adj) {
    const tensor& a = adj.a;
    if (a.rows() != a.cols())
        throw dim_error("normalize: adjacency must be square, got " + a.shape_str());
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n * n; ++i)
        if (a[i] < 0.0)
            throw data_error("normalize: negative adjacency entry at index " + std::to_string(i));

    // Â = D^{-1/2}(A+I)D^{-1/2}; the self-loop keeps every D_ii > 0.
    std::vector<double> dinv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i) {
        double degree = 1.0;
        for (std::size_t j = 0; j < n; ++j)
            degree += a(i, j);
        dinv_sqrt[i] = 1.0 / std::sqrt(degree);
    }
    tensor a_hat(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double with_loop = a(i, j) + (i == j ? 1.0 : 0.0);
            a_hat(i, j) = dinv_sqrt[i] * with_loop * dinv_sqrt[j];
        }
    return {std::move(a_hat)};
}

adjacency_matrix distance_adjacency(const topology& topo, double sigma, double epsilon) {
    if (!topo.distances)
        throw config_error("distance_adjacency: topology has no distance matrix");
    if (sigma <= 0.0)
        throw config_error("distance_adjacency: sigma must be > 0");
    if (epsilon < 0.0 || epsilon >= 1.0)
        throw config_error("distance_adjacency: epsilon must be in [0, 1)");
    const tensor& d = *topo.distances;
    const std::size_t n = topo.node_count();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (d(i, j) != d(j, i))
                throw config_error("distance_adjacency: distance matrix asymmetric at (" +
                                   std::to_string(i) + ", " + std::to_string(j) + ")");
    adjacency_matrix adj;
    adj.method = adjacency_method::distance;
    adj.a = tensor(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double w = std::exp(-(d(i, j) * d(i, j)) / (sigma * sigma));
            adj.a(i, j) = w >= epsilon ? w : 0.0;
        }
    adj.validate();
    return adj;
}

namespace {

// |Pearson| matrix; throws on zero-variance nodes.
tensor abs_correlation_matrix(const traffic_series& series) {
    const std::size_t t_len = series.steps();
    const std::size_t n = series.nodes();
    if (t_len < 3)
        throw data_error("correlation: need at least 3 timesteps, got " + std::to_string(t_len));
    const tensor& v = series.values();

    std::vector<double> mean(n, 0.0), sd(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t t = 0; t < t_len; ++t)
            acc += v(t, j);
        mean[j] = acc / static_cast<double>(t_len);
        double ss = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) {
            const double c = v(t, j) - mean[j];
            ss += c * c;
        }
        sd[j] = std::sqrt(ss);
        if (sd[j] == 0.0)
            throw data_error("correlation: node '" + series.node_names()[j] +
                             "' has zero variance");
    }
    tensor r(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        r(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double cov = 0.0;
            for (std::size_t t = 0; t < t_len; ++t)
                cov += (v(t, i) - mean[i]) * (v(t, j) - mean[j]);
            const double rho = std::abs(cov / (sd[i] * sd[j]));
            r(i, j) = rho;
            r(j, i) = rho;
        }
    }
    return r;
}

} // namespace

adjacency_matrix correlation_adjacency(const traffic_series& series, double tau) {
    if (tau < 0.0 || tau > 1.0)
        throw config_error("correlation_adjacency: tau must be in [0, 1]");
    tensor r = abs_correlation_matrix(series);
    const std::size_t n = r.rows();
    adjacency_matrix adj;
    adj.method = adjacency_method::correlation;
    adj.a = tensor(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            adj.a(i, j) = r(i, j) >= tau ? r(i, j) : 0.0;
        }
    adj.validate();
    return adj;
}

adjacency_matrix knn_adjacency(const traffic_series& series, std::size_t k) {
    const std::size_t n = series.nodes();
    if (k < 1 || k >= n)
        throw config_error("knn_adjacency: k must satisfy 1 <= k < N, got k=" +
                           std::to_string(k) + ", N=" + std::to_string(n));
    tensor r = abs_correlation_matrix(series);
    adjacency_matrix adj;
    adj.method = adjacency_method::knn;
    adj.a = tensor(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> order;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                order.push_back(j);
        // descending correlation, ties to the lower node index
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            if (r(i, x) != r(i, y)) return r(i, x) > r(i, y);
            return x < y;
        });
        for (std::size_t t = 0; t < k; ++t)
            adj.a(i, order[t]) = r(i, order[t]);
    }
    // A ← max(A, Aᵀ)
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = std::max(adj.a(i, j), adj.a(j, i));
            adj.a(i, j) = m;
            adj.a(j, i) = m;
        }
    adj.validate();
    return adj;
}

std::optional<std::size_t> adaptive_adjacency::window_for_row(std::size_t row) const {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < last_row.size(); ++i)
        if (last_row[i] <= row)
            best = i;
    return best;
}

adaptive_adjacency make_adaptive_adjacency(const traffic_series& series, std::size_t window,
                                           std::size_t stride, double tau) {
    if (window > series.steps())
        throw config_error("adaptive_adjacency: window " + std::to_string(window) +
                           " exceeds series length " + std::to_string(series.steps()));
    if (window < 3)
        throw config_error("adaptive_adjacency: window must be >= 3");
    if (stride == 0)
        throw config_error("adaptive_adjacency: stride must be >= 1");
    adaptive_adjacency out;
    for (std::size_t start = 0; start + window <= series.steps(); start += stride) {
        traffic_series chunk = series.slice(start, start + window);
        adjacency_matrix adj = correlation_adjacency(chunk, tau);
        adj.method = adjacency_method::adaptive;
        out.windows.push_back(std::move(adj));
        out.last_row.push_back(start + window - 1);
    }
    return out;
}

var learnable_adjacency(tape& t, var embeddings) {
    const tensor& e = embeddings.value();
    if (e.cols() < 1)
        throw dim_error("learnable_adjacency: embedding dim must be >= 1");
    if (e.rows() < 2)
        throw dim_error("learnable_adjacency: need at least 2 nodes, got " +
                        std::to_string(e.rows()));
    var scores = t.relu(t.matmul(embeddings, t.transpose(embeddings)));
    return t.row_softmax_masked(scores, bool_mask::off_diagonal(e.rows()));
}

adjacency_matrix load_adjacency_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("adjacency: cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                           : comma - pos);
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw data_error("adjacency: bad value '" + cell + "' at line " +
                                 std::to_string(line_no));
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    const std::size_t n = rows.size();
    if (n == 0)
        throw data_error("adjacency: '" + path + "' is empty");
    adjacency_matrix adj;
    adj.method = adjacency_method::explicit_matrix;
    adj.a = tensor(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n)
            throw data_error("adjacency: row " + std::to_string(i + 1) + " has " +
                             std::to_string(rows[i].size()) + " values, expected " +
                             std::to_string(n));
        for (std::size_t j = 0; j < n; ++j)
            adj.a(i, j) = rows[i][j];
    }
    adj.validate();
    return adj;
}

double estimate_spectral_radius(const tensor& m, std::size_t iterations, std::uint64_t seed) {
    if (m.rows() != m.cols())
        throw dim_error("estimate_spectral_radius: matrix must be square, got " + m.shape_str());
    const std::size_t n = m.rows();
    rng gen(derive_seed(seed, "power-iteration"));
    std::vector<double> v(n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = gen.uniform(0.1, 1.0); // positive start avoids orthogonal unlucky starts
        norm += v[i] * v[i];
    }
    norm = std::sqrt(norm);
    for (auto& x : v)
        x /= norm;

    double lambda = 0.0;
    std::vector<double> w(n);
    for (std::size_t it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                acc += m(i, j) * v[j];
            w[i] = acc;
        }
        double wnorm = 0.0;
        double rayleigh = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            wnorm += w[i] * w[i];
            rayleigh += w[i] * v[i];
        }
        wnorm = std::sqrt(wnorm);
        if (wnorm == 0.0)
            return 0.0;
        lambda = std::abs(rayleigh);
        for (std::size_t i = 0; i < n; ++i)
            v[i] = w[i] / wnorm;
    }
    return lambda;
}

bool_mask neighbor_mask_with_self(const tensor& adjacency) {
    if (adjacency.rows() != adjacency.cols())
        throw dim_error("neighbor_mask_with_self: adjacency must be square, got " +
                        adjacency.shape_str());
    const std::size_t n = adjacency.rows();
    bool_mask m(n, n, false);
    for (std::size_t i = 0; i < n; ++i) {
        m.set(i, i, true);
        for (std::size_t j = 0; j < n; ++j)
            if (adjacency(i, j) > 0.0)
                m.set(i, j, true);
    }
    return m;
}

} // namespace flowcast
