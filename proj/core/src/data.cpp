#include "flowcast/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "flowcast/rng.hpp"

namespace flowcast {

traffic_series::traffic_series(std::vector<std::int64_t> timestamps, tensor values,
                               std::vector<std::string> node_names)
    : timestamps_(std::move(timestamps)), values_(std::move(values)),
      node_names_(std::move(node_names)) {
    validate();
}

void traffic_series::validate() const {
    if (timestamps_.size() != values_.rows())
        throw data_error("traffic_series: " + std::to_string(timestamps_.size()) +
                         " timestamps vs " + std::to_string(values_.rows()) + " rows");
    if (node_names_.size() != values_.cols())
        throw data_error("traffic_series: " + std::to_string(node_names_.size()) +
                         " names vs " + std::to_string(values_.cols()) + " columns");
    for (std::size_t t = 1; t < timestamps_.size(); ++t)
        if (timestamps_[t] <= timestamps_[t - 1])
            throw data_error("traffic_series: timestamps not strictly increasing at row " +
                             std::to_string(t + 1));
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]))
            throw data_error("traffic_series: non-finite value at index " + std::to_string(i));
    }
}

traffic_series traffic_series::slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > steps())
        throw dim_error("traffic_series::slice: invalid range [" + std::to_string(begin) + ", " +
                        std::to_string(end) + ") for " + std::to_string(steps()) + " rows");
    std::vector<std::int64_t> ts(timestamps_.begin() + static_cast<std::ptrdiff_t>(begin),
                                 timestamps_.begin() + static_cast<std::ptrdiff_t>(end));
    tensor v(end - begin, nodes());
    for (std::size_t t = begin; t < end; ++t)
        for (std::size_t j = 0; j < nodes(); ++j)
            v(t - begin, j) = values_(t, j);
    return traffic_series(std::move(ts), std::move(v), node_names_);
}

std::vector<double> traffic_series::node_series(std::size_t node) const {
    std::vector<double> out(steps());
    for (std::size_t t = 0; t < steps(); ++t)
        out[t] = values_(t, node);
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(pos));
            break;
        }
        cells.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    // trim whitespace and a trailing \r
    for (auto& c : cells) {
        while (!c.empty() && (c.back() == '\r' || c.back() == ' ' || c.back() == '\t'))
            c.pop_back();
        std::size_t i = 0;
        while (i < c.size() && (c[i] == ' ' || c[i] == '\t'))
            ++i;
        c.erase(0, i);
    }
    return cells;
}

// Integer epoch-seconds, or ISO-8601 "YYYY-MM-DD[T ]HH:MM:SS[Z]".
std::int64_t parse_timestamp(const std::string& s, std::size_t row_no) {
    if (s.empty())
        throw data_error("traffic csv: empty timestamp at row " + std::to_string(row_no));
    bool digits = true;
    for (std::size_t i = (s[0] == '-' ? 1 : 0); i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
            digits = false;
            break;
        }
    if (digits) {
        try {
            return std::stoll(s);
        } catch (const std::exception&) {
            throw data_error("traffic csv: bad timestamp '" + s + "' at row " +
                             std::to_string(row_no));
        }
    }
    std::tm tm{};
    int y, mo, d, h, mi, sec;
    if (std::sscanf(s.c_str(), "%d-%d-%d%*1[T ]%d:%d:%d", &y, &mo, &d, &h, &mi, &sec) != 6)
        throw data_error("traffic csv: bad timestamp '" + s + "' at row " +
                         std::to_string(row_no) + " (expected epoch seconds or ISO-8601)");
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = sec;
    return static_cast<std::int64_t>(timegm(&tm));
}

} // namespace

traffic_series load_traffic_csv(const std::string& path, const topology& topo) {
    std::ifstream in(path);
    if (!in)
        throw config_error("traffic csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw data_error("traffic csv: '" + path + "' is empty");
    auto header = split_csv_line(line);
    if (header.empty() || header[0] != "timestamp")
        throw data_error("traffic csv: first header column must be 'timestamp'");

    const std::size_t n = topo.node_count();
    std::map<std::string, std::size_t> node_index;
    for (std::size_t i = 0; i < n; ++i)
        node_index[topo.node_names[i]] = i;

    // Column plan: node-level files map one column to one node; link-level
    // files ("src->dst") add each column into both endpoints' totals.
    const bool link_level = std::any_of(header.begin() + 1, header.end(), [](const auto& h) {
        return h.find("->") != std::string::npos;
    });
    struct column_target {
        std::size_t a;
        std::size_t b;
        bool is_link;
    };
    std::vector<column_target> plan;
    std::vector<bool> node_seen(n, false);
    for (std::size_t c = 1; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (link_level) {
            std::size_t arrow = name.find("->");
            if (arrow == std::string::npos)
                throw data_error("traffic csv: mixed link and node columns ('" + name + "')");
            const std::string src = name.substr(0, arrow);
            const std::string dst = name.substr(arrow + 2);
            auto si = node_index.find(src);
            auto di = node_index.find(dst);
            if (si == node_index.end())
                throw data_error("traffic csv: unknown node '" + src + "' in column '" + name +
                                 "'");
            if (di == node_index.end())
                throw data_error("traffic csv: unknown node '" + dst + "' in column '" + name +
                                 "'");
            plan.push_back({si->second, di->second, true});
        } else {
            auto it = node_index.find(name);
            if (it == node_index.end())
                throw data_error("traffic csv: unknown column '" + name + "'");
            if (node_seen[it->second])
                throw data_error("traffic csv: duplicate column '" + name + "'");
            node_seen[it->second] = true;
            plan.push_back({it->second, 0, false});
        }
    }
    if (!link_level)
        for (std::size_t i = 0; i < n; ++i)
            if (!node_seen[i])
                throw data_error("traffic csv: missing column for node '" + topo.node_names[i] +
                                 "'");

    std::vector<std::int64_t> timestamps;
    std::vector<std::vector<double>> rows;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw data_error("traffic csv: row " + std::to_string(row_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        timestamps.push_back(parse_timestamp(cells[0], row_no));
        std::vector<double> row(n, 0.0);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            double v;
            try {
                v = std::stod(cells[c]);
            } catch (const std::exception&) {
                throw data_error("traffic csv: bad value '" + cells[c] + "' at row " +
                                 std::to_string(row_no));
            }
            if (v < 0.0)
                throw data_error("traffic csv: negative value at row " + std::to_string(row_no) +
                                 ", column '" + header[c] + "'");
            const auto& tgt = plan[c - 1];
            if (tgt.is_link) {
                row[tgt.a] += v; // outgoing for src
                row[tgt.b] += v; // incoming for dst
            } else {
                row[tgt.a] = v;
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw data_error("traffic csv: '" + path + "' has no data rows");
    for (std::size_t t = 1; t < timestamps.size(); ++t)
        if (timestamps[t] <= timestamps[t - 1])
            throw data_error("traffic csv: timestamps not strictly increasing at row " +
                             std::to_string(t + 2));

    tensor values(rows.size(), n);
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t j = 0; j < n; ++j)
            values(t, j) = rows[t][j];
    return traffic_series(std::move(timestamps), std::move(values), topo.node_names);
}

void save_traffic_csv(const traffic_series& series, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw config_error("traffic csv: cannot write '" + path + "'");
    out << "timestamp";
    for (const auto& name : series.node_names())
        out << "," << name;
    out << "\n";
    char buf[64];
    for (std::size_t t = 0; t < series.steps(); ++t) {
        out << series.timestamps()[t];
        for (std::size_t j = 0; j < series.nodes(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", series.values()(t, j));
            out << "," << buf;
        }
        out << "\n";
    }
}

std::string to_string(norm_mode m) {
    return m == norm_mode::zscore ? "zscore" : "minmax";
}

norm_mode norm_mode_from_string(const std::string& s) {
    if (s == "zscore") return norm_mode::zscore;
    if (s == "minmax") return norm_mode::minmax;
    throw config_error("unknown normalization mode '" + s + "' (expected zscore|minmax)");
}

normalizer normalizer::fit(const traffic_series& series, norm_mode mode, double train_fraction) {
    if (train_fraction <= 0.0 || train_fraction > 1.0)
        throw config_error("normalizer: train_fraction must be in (0, 1]");
    const std::size_t t_fit =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(series.steps())));
    if (t_fit < 2)
        throw data_error("normalizer: training split has " + std::to_string(t_fit) +
                         " rows, need at least 2");
    const tensor& v = series.values();
    const std::size_t n = series.nodes();

    normalizer norm;
    norm.mode_ = mode;
    norm.offset_.resize(n);
    norm.scale_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (mode == norm_mode::zscore) {
            double mean = 0.0;
            for (std::size_t t = 0; t < t_fit; ++t)
                mean += v(t, j);
            mean /= static_cast<double>(t_fit);
            double ss = 0.0;
            for (std::size_t t = 0; t < t_fit; ++t) {
                const double c = v(t, j) - mean;
                ss += c * c;
            }
            const double sd = std::sqrt(ss / static_cast<double>(t_fit));
            if (sd == 0.0)
                throw data_error("normalizer: node '" + series.node_names()[j] +
                                 "' has zero variance on the training split");
            norm.offset_[j] = mean;
            norm.scale_[j] = sd;
        } else {
            double lo = v(0, j), hi = v(0, j);
            for (std::size_t t = 1; t < t_fit; ++t) {
                lo = std::min(lo, v(t, j));
                hi = std::max(hi, v(t, j));
            }
            if (hi == lo)
                throw data_error("normalizer: node '" + series.node_names()[j] +
                                 "' is constant on the training split");
            norm.offset_[j] = lo;
            norm.scale_[j] = hi - lo;
        }
    }
    return norm;
}

tensor normalizer::transform(const tensor& values) const {
    if (values.cols() != offset_.size())
        throw dim_error("normalizer: " + std::to_string(values.cols()) + " columns vs " +
                        std::to_string(offset_.size()) + " fitted nodes");
    tensor out = values;
    for (std::size_t t = 0; t < out.rows(); ++t)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out(t, j) = (out(t, j) - offset_[j]) / scale_[j];
    return out;
}

tensor normalizer::inverse(const tensor& values) const {
    if (values.cols() != offset_.size())
        throw dim_error("normalizer: " + std::to_string(values.cols()) + " columns vs " +
                        std::to_string(offset_.size()) + " fitted nodes");
    tensor out = values;
    for (std::size_t t = 0; t < out.rows(); ++t)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out(t, j) = out(t, j) * scale_[j] + offset_[j];
    return out;
}

traffic_series normalizer::transform(const traffic_series& series) const {
    tensor v = transform(series.values());
    // normalized values may be negative; rebuild without re-validating range
    traffic_series out = series;
    out.values() = std::move(v);
    return out;
}

std::pair<traffic_series, normalizer> fit_transform(const traffic_series& series, norm_mode mode,
                                                    double train_fraction) {
    normalizer norm = normalizer::fit(series, mode, train_fraction);
    return {norm.transform(series), norm};
}

windowed_dataset make_windows(const traffic_series& series, std::size_t window,
                              std::size_t horizon, std::size_t stride) {
    if (window < 1 || horizon < 1)
        throw config_error("make_windows: window and horizon must be >= 1");
    if (stride < 1)
        throw config_error("make_windows: stride must be >= 1");
    const std::size_t t_len = series.steps();
    if (window + horizon > t_len)
        throw data_error("make_windows: need at least window+horizon = " +
                         std::to_string(window + horizon) + " rows, got " +
                         std::to_string(t_len));
    const tensor& v = series.values();
    const std::size_t n = series.nodes();

    windowed_dataset ds;
    ds.window = window;
    ds.horizon = horizon;
    ds.nodes = n;
    for (std::size_t m = 0; m + window + horizon <= t_len; m += stride) {
        window_sample s;
        s.input_begin = m;
        s.input_end = m + window;
        s.target_begin = m + window;
        s.target_end = m + window + horizon;
        s.input = tensor(window, n);
        for (std::size_t t = 0; t < window; ++t)
            for (std::size_t j = 0; j < n; ++j)
                s.input(t, j) = v(m + t, j);
        s.target = tensor(n, horizon); // transposed: node rows, horizon columns
        for (std::size_t h = 0; h < horizon; ++h)
            for (std::size_t j = 0; j < n; ++j)
                s.target(j, h) = v(m + window + h, j);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

dataset_splits chrono_split(const windowed_dataset& dataset, double train_fraction,
                            double val_fraction, double test_fraction) {
    if (train_fraction <= 0.0 || val_fraction <= 0.0 || test_fraction <= 0.0)
        throw data_error("chrono_split: all fractions must be positive");
    const double total = train_fraction + val_fraction + test_fraction;
    if (std::abs(total - 1.0) > 1e-9)
        throw data_error("chrono_split: fractions sum to " + std::to_string(total) +
                         ", expected 1");
    const std::size_t m = dataset.size();
    const std::size_t n_val =
        static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(m)));
    const std::size_t n_test =
        static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(m)));
    if (n_val == 0 || n_test == 0 || n_val + n_test >= m)
        throw data_error("chrono_split: split of " + std::to_string(m) +
                         " samples leaves an empty part");
    const std::size_t n_train = m - n_val - n_test;

    auto take = [&](std::size_t begin, std::size_t end) {
        windowed_dataset part;
        part.window = dataset.window;
        part.horizon = dataset.horizon;
        part.nodes = dataset.nodes;
        part.samples.assign(dataset.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                            dataset.samples.begin() + static_cast<std::ptrdiff_t>(end));
        return part;
    };
    dataset_splits splits;
    splits.train = take(0, n_train);
    splits.val = take(n_train, n_train + n_val);
    splits.test = take(n_train + n_val, m);
    return splits;
}

traffic_series generate_synthetic(const topology& topo, std::size_t steps, std::uint64_t seed,
                                  const synthetic_options& options) {
    if (steps < 1)
        throw config_error("generate_synthetic: steps must be >= 1");
    topo.validate();
    const std::size_t n = topo.node_count();
    const auto neighbors = topo.neighbor_lists();

    rng param_gen(derive_seed(seed, "synthetic:params"));
    std::vector<double> offset(n), amp(n), phase(n);
    for (std::size_t j = 0; j < n; ++j) {
        offset[j] = param_gen.uniform(options.offset_min, options.offset_max);
        amp[j] = param_gen.uniform(options.amp_min, options.amp_max);
        phase[j] = param_gen.uniform(0.0, static_cast<double>(options.period));
    }
    rng noise_gen(derive_seed(seed, "synthetic:noise"));

    const double two_pi = 2.0 * 3.14159265358979323846;
    tensor values(steps, n);
    std::vector<double> prev(n, 0.0);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t j = 0; j < n; ++j) {
            const double base =
                offset[j] +
                amp[j] * std::sin(two_pi * (static_cast<double>(t) + phase[j]) /
                                  static_cast<double>(options.period));
            double coupled = base;
            if (t > 0 && options.coupling != 0.0 && !neighbors[j].empty()) {
                double neighbor_mean = 0.0;
                for (std::size_t k : neighbors[j])
                    neighbor_mean += prev[k];
                neighbor_mean /= static_cast<double>(neighbors[j].size());
                coupled += options.coupling * (neighbor_mean - prev[j]);
            }
            if (options.noise_std > 0.0)
                coupled += options.noise_std * noise_gen.gaussian();
            values(t, j) = std::max(coupled, 0.0);
        }
        for (std::size_t j = 0; j < n; ++j)
            prev[j] = values(t, j);
    }

    std::vector<std::int64_t> timestamps(steps);
    for (std::size_t t = 0; t < steps; ++t)
        timestamps[t] =
            options.start_epoch + static_cast<std::int64_t>(t) * options.step_seconds;
    return traffic_series(std::move(timestamps), std::move(values), topo.node_names);
}

} // namespace flowcast
