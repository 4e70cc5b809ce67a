#pragma once

#include <stdexcept>

namespace flowcast {

// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or calling-contract violation: mismatched matmul operands,
// non-scalar backward root, incompatible gate shapes.
struct dim_error : error {
    using error::error;
};

// Bad input data: malformed CSV, non-monotone timestamps, degenerate
// (zero-variance) series, empty splits, fully-masked softmax rows.
struct data_error : error {
    using error::error;
};

// Bad configuration: unknown config keys, out-of-range parameters,
// missing required inputs (e.g. no distance matrix for the distance method).
struct config_error : error {
    using error::error;
};

// Numeric failure at run time: training divergence, non-finite gradients.
struct numeric_error : error {
    using error::error;
};

} // namespace flowcast
