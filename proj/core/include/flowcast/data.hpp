#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowcast/graph.hpp"
#include "flowcast/tensor.hpp"

namespace flowcast {

// T×N traffic matrix (bytes/second) with strictly increasing timestamps.
class traffic_series {
  public:
    traffic_series() = default;
    traffic_series(std::vector<std::int64_t> timestamps, tensor values,
                   std::vector<std::string> node_names);

    std::size_t steps() const { return values_.rows(); }
    std::size_t nodes() const { return values_.cols(); }
    const tensor& values() const { return values_; }
    tensor& values() { return values_; }
    const std::vector<std::int64_t>& timestamps() const { return timestamps_; }
    const std::vector<std::string>& node_names() const { return node_names_; }

    // Rows [begin, end) as a new series.
    traffic_series slice(std::size_t begin, std::size_t end) const;

    // Per-node column as a flat vector.
    std::vector<double> node_series(std::size_t node) const;

    void validate() const;

  private:
    std::vector<std::int64_t> timestamps_;
    tensor values_; // T×N
    std::vector<std::string> node_names_;
};

// Node-level CSV: header `timestamp,<name>,...`. Link-level CSV: columns
// named `src->dst`, aggregated to node level by summing in+out per node.
traffic_series load_traffic_csv(const std::string& path, const topology& topo);
void save_traffic_csv(const traffic_series& series, const std::string& path);

enum class norm_mode : std::uint8_t { zscore, minmax };
std::string to_string(norm_mode m);
norm_mode norm_mode_from_string(const std::string& s);

// Per-node statistics fitted on the training split only.
class normalizer {
  public:
    normalizer() = default;

    static normalizer fit(const traffic_series& series, norm_mode mode, double train_fraction);

    tensor transform(const tensor& values) const;  // rows×N, N must match
    tensor inverse(const tensor& values) const;

    traffic_series transform(const traffic_series& series) const;

    norm_mode mode() const { return mode_; }
    const std::vector<double>& offset() const { return offset_; } // mean or min
    const std::vector<double>& scale() const { return scale_; }   // std or max−min

  private:
    norm_mode mode_ = norm_mode::zscore;
    std::vector<double> offset_;
    std::vector<double> scale_;
};

// Convenience wrapper: fit on the training prefix, transform everything.
std::pair<traffic_series, normalizer> fit_transform(const traffic_series& series, norm_mode mode,
                                                    double train_fraction);

// One supervised sample: input rows [input_begin, input_end), target rows
// [target_begin, target_end). Targets are stored transposed as N×h.
struct window_sample {
    tensor input;  // W×N
    tensor target; // N×h
    std::size_t input_begin = 0;
    std::size_t input_end = 0;  // exclusive
    std::size_t target_begin = 0;
    std::size_t target_end = 0; // exclusive
};

struct windowed_dataset {
    std::vector<window_sample> samples;
    std::size_t window = 0;
    std::size_t horizon = 0;
    std::size_t nodes = 0;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

windowed_dataset make_windows(const traffic_series& series, std::size_t window,
                              std::size_t horizon, std::size_t stride = 1);

struct dataset_splits {
    windowed_dataset train;
    windowed_dataset val;
    windowed_dataset test;
};

// Chronological split by sample start time; floor sizes for val/test,
// remainder to train. Every split must end up nonempty.
dataset_splits chrono_split(const windowed_dataset& dataset, double train_fraction,
                            double val_fraction, double test_fraction);

struct synthetic_options {
    double coupling = 0.3;     // pull toward the neighbor average
    double noise_std = 10.0;   // additive Gaussian noise, bytes/s
    double offset_min = 200.0; // per-node base level range
    double offset_max = 800.0;
    double amp_min = 50.0;     // per-node daily amplitude range
    double amp_max = 300.0;
    std::size_t period = 288;  // daily cycle at 5-minute cadence
    std::int64_t start_epoch = 1700000000;
    std::int64_t step_seconds = 300;
};

// Per-node daily sinusoid + neighbor-coupled diffusion + seeded noise,
// clamped at 0. Bit-identical for a fixed seed.
traffic_series generate_synthetic(const topology& topo, std::size_t steps, std::uint64_t seed,
                                  const synthetic_options& options = {});

} // namespace flowcast
