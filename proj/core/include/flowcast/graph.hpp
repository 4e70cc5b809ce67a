#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowcast/tape.hpp"
#include "flowcast/tensor.hpp"

namespace flowcast {

class traffic_series; // data.hpp

struct edge {
    std::size_t from = 0;
    std::size_t to = 0;
    double weight = 1.0;
};

// The network graph G = (V, E). Raw edges carry no self-loops; self-loops
// enter only through normalization. `distances` is an optional N×N matrix
// (hop counts or geometric distances) used by the distance kernel.
struct topology {
    std::vector<std::string> node_names;
    std::vector<edge> edges;
    std::optional<tensor> distances;

    std::size_t node_count() const { return node_names.size(); }
    void validate() const;

    // Weighted adjacency from the edge list (symmetrized; zero diagonal).
    tensor edge_adjacency() const;

    // Undirected neighbor lists derived from the edge list.
    std::vector<std::vector<std::size_t>> neighbor_lists() const;
};

topology load_topology_json(const std::string& path);
void save_topology_json(const topology& topo, const std::string& path);

// Simple generators used by tests and examples; hop distances filled in.
topology make_ring_topology(std::size_t n);

enum class adjacency_method : std::uint8_t {
    distance,
    correlation,
    knn,
    adaptive,
    learnable,
    explicit_matrix
};

std::string to_string(adjacency_method m);
adjacency_method adjacency_method_from_string(const std::string& s);

// Raw (unnormalized) adjacency plus the strategy that produced it.
// Static strategies yield symmetric, zero-diagonal, nonnegative matrices.
struct adjacency_matrix {
    tensor a;
    adjacency_method method = adjacency_method::explicit_matrix;

    std::size_t node_count() const { return a.rows(); }
    void validate() const;
};

// Â = D^{-1/2}(A+I)D^{-1/2} with D the degree matrix of A+I.
struct normalized_adjacency {
    tensor a_hat;
};

normalized_adjacency normalize(const adjacency_matrix& adj);

// A_ij = exp(−d_ij²/σ²) when ≥ epsilon and i≠j, else 0.
adjacency_matrix distance_adjacency(const topology& topo, double sigma, double epsilon);

// A_ij = |Pearson(series_i, series_j)| when ≥ tau and i≠j, else 0.
adjacency_matrix correlation_adjacency(const traffic_series& series, double tau);

// Keep each node's top-k absolute correlations (ties to the lower index),
// then symmetrize by elementwise max.
adjacency_matrix knn_adjacency(const traffic_series& series, std::size_t k);

// correlation_adjacency recomputed on rolling windows. last_row[i] is the
// index of the last series row that window i saw; a sample may only use
// window i when the sample's last input row is ≥ last_row[i].
struct adaptive_adjacency {
    std::vector<adjacency_matrix> windows;
    std::vector<std::size_t> last_row;

    // Latest window whose data ends at or before `row`; nullopt when none
    // has completed yet.
    std::optional<std::size_t> window_for_row(std::size_t row) const;
};

adaptive_adjacency make_adaptive_adjacency(const traffic_series& series, std::size_t window,
                                           std::size_t stride, double tau);

// Tape-attached A = row_softmax(relu(E·Eᵀ), diagonal masked); rows sum to 1
// and gradients flow to the embeddings.
var learnable_adjacency(tape& t, var embeddings);

// N rows × N comma-separated reals; must be symmetric, nonnegative,
// zero-diagonal.
adjacency_matrix load_adjacency_csv(const std::string& path);

// Power-iteration estimate of the spectral radius; deterministic for a
// fixed seed. Intended for symmetric matrices.
double estimate_spectral_radius(const tensor& m, std::size_t iterations = 200,
                                std::uint64_t seed = 1);

// Neighbor mask N(i) = support(A) ∪ {i}; self-inclusion keeps isolated
// nodes attached to their own features.
bool_mask neighbor_mask_with_self(const tensor& adjacency);

} // namespace flowcast
