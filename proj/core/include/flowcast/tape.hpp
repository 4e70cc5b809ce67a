#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "flowcast/tensor.hpp"

namespace flowcast {

class tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class var {
  public:
    var() = default;
    const tensor& value() const;
    std::size_t id() const { return id_; }
    tape* owner() const { return tape_; }
    bool valid() const { return tape_ != nullptr; }

  private:
    friend class tape;
    var(tape* t, std::size_t id) : tape_(t), id_(id) {}
    tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

// Append-only reverse-mode differentiation tape over dense matrices.
// Nodes are recorded in topological order as ops execute (define-by-run);
// a tape is rebuilt per training step and is single-owner: it must not be
// shared across threads during construction or backward.
class tape {
  public:
    tape() = default;
    tape(const tape&) = delete;
    tape& operator=(const tape&) = delete;

    var leaf(tensor value);

    var matmul(var a, var b);
    var add(var a, var b);
    var sub(var a, var b);
    var hadamard(var a, var b);
    var scale(var a, double factor);
    var one_minus(var a);
    var add_rowvec(var a, var row); // row: 1×n, broadcast over a's rows
    var transpose(var a);
    var slice_rows(var a, std::size_t begin, std::size_t end);
    var sigmoid(var a);
    var tanh(var a);
    var relu(var a);
    var leaky_relu(var a, double slope);
    var row_softmax_masked(var a, bool_mask mask);
    var mean_all(var a);
    var sum_all(var a);
    var square(var a);

    // Reverse accumulation from a scalar (1×1) root. Deterministic for a
    // fixed tape; may be called repeatedly (gradients are reset each call).
    void backward(var root);

    const tensor& value(var v) const;
    const tensor& grad(var v) const; // valid after backward
    std::size_t node_count() const { return nodes_.size(); }

  private:
    enum class op {
        leaf,
        matmul,
        add,
        sub,
        hadamard,
        scale,
        one_minus,
        add_rowvec,
        transpose,
        slice_rows,
        sigmoid,
        tanh_fn,
        relu,
        leaky_relu,
        softmax_rows,
        mean_all,
        sum_all,
        square
    };

    struct node {
        op kind = op::leaf;
        std::array<std::size_t, 2> in{{0, 0}};
        int arity = 0;
        tensor out;
        double scalar = 0.0;               // scale factor or leaky slope
        std::size_t begin = 0, end = 0;    // slice_rows bounds
        bool_mask mask;                    // softmax support
    };

    var push(node n);
    std::size_t idx(var v, const char* op_name) const;

    std::vector<node> nodes_;
    std::vector<tensor> grads_;
    bool has_grads_ = false;
};

} // namespace flowcast
