#include "flowcast/tensor.hpp"

#include <cmath>

namespace flowcast {

tensor::tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

tensor tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    tensor t;
    t.rows_ = rows.size();
    t.cols_ = rows.size() ? rows.begin()->size() : 0;
    t.data_.reserve(t.rows_ * t.cols_);
    for (const auto& row : rows) {
        if (row.size() != t.cols_)
            throw dim_error("tensor::from_rows: ragged rows");
        t.data_.insert(t.data_.end(), row.begin(), row.end());
    }
    return t;
}

tensor tensor::identity(std::size_t n) {
    tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i)
        t(i, i) = 1.0;
    return t;
}

std::string tensor::shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v))
            return false;
    return true;
}

bool_mask::bool_mask(std::size_t rows, std::size_t cols, bool fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill ? 1 : 0) {}

bool_mask bool_mask::off_diagonal(std::size_t n) {
    bool_mask m(n, n, true);
    for (std::size_t i = 0; i < n; ++i)
        m.set(i, i, false);
    return m;
}

void require_same_shape(const tensor& a, const tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw dim_error(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                        b.shape_str());
}

tensor matmul_nn(const tensor& a, const tensor& b) {
    if (a.cols() != b.rows())
        throw dim_error("matmul: inner dimensions disagree " + a.shape_str() + " · " +
                        b.shape_str());
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    tensor c(m, n);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        double* crow = pc + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = arow[l];
            const double* brow = pb + l * n;
            for (std::size_t j = 0; j < n; ++j)
                crow[j] += ail * brow[j];
        }
    }
    return c;
}

tensor matmul_nt(const tensor& a, const tensor& b) {
    if (a.cols() != b.cols())
        throw dim_error("matmul_nt: inner dimensions disagree " + a.shape_str() + " · " +
                        b.shape_str() + "ᵀ");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    tensor c(m, n);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = pa + i * k;
        double* crow = pc + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = pb + j * k;
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l)
                acc += arow[l] * brow[l];
            crow[j] = acc;
        }
    }
    return c;
}

tensor matmul_tn(const tensor& a, const tensor& b) {
    if (a.rows() != b.rows())
        throw dim_error("matmul_tn: inner dimensions disagree " + a.shape_str() + "ᵀ · " +
                        b.shape_str());
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    tensor c(m, n);
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    for (std::size_t l = 0; l < k; ++l) {
        const double* arow = pa + l * m;
        const double* brow = pb + l * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double ali = arow[i];
            double* crow = pc + i * n;
            for (std::size_t j = 0; j < n; ++j)
                crow[j] += ali * brow[j];
        }
    }
    return c;
}

tensor transposed(const tensor& a) {
    tensor t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            t(j, i) = a(i, j);
    return t;
}

double sum_squares(const tensor& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += a[i] * a[i];
    return acc;
}

void scale_inplace(tensor& a, double factor) {
    for (std::size_t i = 0; i < a.size(); ++i)
        a[i] *= factor;
}

void add_inplace(tensor& dst, const tensor& src) {
    require_same_shape(dst, src, "add_inplace");
    for (std::size_t i = 0; i < dst.size(); ++i)
        dst[i] += src[i];
}

} // namespace flowcast
