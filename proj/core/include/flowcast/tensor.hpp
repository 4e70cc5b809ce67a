#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "flowcast/errors.hpp"

namespace flowcast {

// Dense row-major matrix of doubles. The whole engine runs in 64-bit.
class tensor {
  public:
    tensor() = default;
    tensor(std::size_t rows, std::size_t cols, double fill = 0.0);

    static tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static tensor identity(std::size_t n);
    static tensor ones(std::size_t rows, std::size_t cols) { return tensor(rows, cols, 1.0); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_str() const;
    bool all_finite() const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Boolean matrix; used for neighbor masks in attention and masked softmax.
class bool_mask {
  public:
    bool_mask() = default;
    bool_mask(std::size_t rows, std::size_t cols, bool fill = false);

    // All-true except the diagonal.
    static bool_mask off_diagonal(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    bool at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c] != 0; }
    void set(std::size_t r, std::size_t c, bool v) { data_[r * cols_ + c] = v ? 1 : 0; }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> data_;
};

// Raw kernels shared by tape forward/backward passes and the optimizer.
tensor matmul_nn(const tensor& a, const tensor& b); // a · b
tensor matmul_nt(const tensor& a, const tensor& b); // a · bᵀ
tensor matmul_tn(const tensor& a, const tensor& b); // aᵀ · b
tensor transposed(const tensor& a);

double sum_squares(const tensor& a);
void scale_inplace(tensor& a, double factor);
void add_inplace(tensor& dst, const tensor& src); // dst += src

// Throws dim_error naming both shapes when a and b disagree.
void require_same_shape(const tensor& a, const tensor& b, const char* op);

} // namespace flowcast
