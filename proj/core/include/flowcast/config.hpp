#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowcast/data.hpp"
#include "flowcast/graph.hpp"

namespace flowcast {

enum class temporal_kind : std::uint8_t { gru, lstm };
std::string to_string(temporal_kind k);
temporal_kind temporal_kind_from_string(const std::string& s);

enum class activation_kind : std::uint8_t { relu, tanh_fn, sigmoid, identity };
std::string to_string(activation_kind k);
activation_kind activation_kind_from_string(const std::string& s);

// Resolved settings for the whole pipeline. Sections mirror the module
// split; an INI config file uses the same names.
struct run_config {
    // [data]
    std::size_t window = 12;
    std::size_t horizon = 1;
    std::size_t stride = 1;
    norm_mode normalization = norm_mode::zscore;
    double train_fraction = 0.7;
    double val_fraction = 0.1;
    double test_fraction = 0.2;

    // [graph]
    adjacency_method adjacency = adjacency_method::distance;
    double sigma = 1.0;
    double epsilon = 0.01;
    double tau = 0.1;
    std::size_t knn_k = 3;
    std::size_t adaptive_window = 288;
    std::size_t adaptive_stride = 288;
    std::size_t embedding_dim = 8;
    std::string adjacency_file; // explicit method only

    // [model]
    std::vector<std::size_t> gcn_widths{32, 32};
    std::size_t gru_hidden = 64;
    temporal_kind temporal = temporal_kind::gru;
    bool attention = false;
    std::vector<std::size_t> attention_layers; // empty = every layer
    std::size_t attention_dim = 8;
    std::size_t head_hidden = 32;
    activation_kind gcn_activation = activation_kind::relu;
    bool attention_leaky_relu = false;
    bool gru_biases = false;

    // [train]
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double clip_norm = 5.0;
    std::size_t patience = 10;
    std::uint64_t seed = 42;

    // Set once data is seen; embedded in artifacts for compatibility checks.
    std::size_t n_nodes = 0;

    void validate() const;

    // Layers that actually run attention (resolves the empty default).
    std::vector<std::size_t> resolved_attention_layers() const;
};

// Parse `[section] key=value` lines into overrides on top of `base`.
// Unknown section/key pairs are errors.
run_config load_config_ini(const std::string& path, const run_config& base = {});

// Apply one `section.key=value` assignment (used for CLI overrides too).
void apply_config_entry(run_config& cfg, const std::string& dotted_key, const std::string& value);

// Canonical JSON object of every resolved setting.
std::string config_to_json(const run_config& cfg);
run_config config_from_json(const std::string& json_text);

// FNV-1a hash of the canonical JSON, as fixed-width hex.
std::string config_fingerprint(const run_config& cfg);

} // namespace flowcast
