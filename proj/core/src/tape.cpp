#include "flowcast/tape.hpp"

#include <cmath>
#include <string>

namespace flowcast {

const tensor& var::value() const {
    return tape_->value(*this);
}

std::size_t tape::idx(var v, const char* op_name) const {
    if (v.owner() != this)
        throw dim_error(std::string(op_name) + ": var does not belong to this tape");
    return v.id();
}

var tape::push(node n) {
    nodes_.push_back(std::move(n));
    has_grads_ = false;
    return var(this, nodes_.size() - 1);
}

const tensor& tape::value(var v) const {
    return nodes_[idx(v, "value")].out;
}

const tensor& tape::grad(var v) const {
    if (!has_grads_)
        throw dim_error("grad: backward has not been run on this tape");
    return grads_[idx(v, "grad")];
}

var tape::leaf(tensor value) {
    node n;
    n.kind = op::leaf;
    n.out = std::move(value);
    return push(std::move(n));
}

var tape::matmul(var a, var b) {
    node n;
    n.kind = op::matmul;
    n.in = {idx(a, "matmul"), idx(b, "matmul")};
    n.arity = 2;
    n.out = matmul_nn(value(a), value(b));
    return push(std::move(n));
}

var tape::add(var a, var b) {
    require_same_shape(value(a), value(b), "add");
    node n;
    n.kind = op::add;
    n.in = {idx(a, "add"), idx(b, "add")};
    n.arity = 2;
    n.out = value(a);
    const tensor& tb = value(b);
    for (std::size_t i = 0; i < n.out.size(); ++i)
        n.out[i] += tb[i];
    return push(std::move(n));
}

var tape::sub(var a, var b) {
    require_same_shape(value(a), value(b), "sub");
    node n;
    n.kind = op::sub;
    n.in = {idx(a, "sub"), idx(b, "sub")};
    n.arity = 2;
    n.out = value(a);
    const tensor& tb = value(b);
    for (std::size_t i = 0; i < n.out.size(); ++i)
        n.out[i] -= tb[i];
    return push(std::move(n));
}

var tape::hadamard(var a, var b) {
    require_same_shape(value(a), value(b), "hadamard");
    node n;
    n.kind = op::hadamard;
    n.in = {idx(a, "hadamard"), idx(b, "hadamard")};
    n.arity = 2;
    n.out = value(a);
    const tensor& tb = value(b);
    for (std::size_t i = 0; i < n.out.size(); ++i)
        n.out[i] *= tb[i];
    return push(std::move(n));
}

var tape::scale(var a, double factor) {
    node n;
    n.kind = op::scale;
    n.in = {idx(a, "scale"), 0};
    n.arity = 1;
    n.scalar = factor;
    n.out = value(a);
    scale_inplace(n.out, factor);
    return push(std::move(n));
}

var tape::one_minus(var a) {
    node n;
    n.kind = op::one_minus;
    n.in = {idx(a, "one_minus"), 0};
    n.arity = 1;
    n.out = value(a);
    for (std::size_t i = 0; i < n.out.size(); ++i)
        n.out[i] = 1.0 - n.out[i];
    return push(std::move(n));
}

var tape::add_rowvec(var a, var row) {
    const tensor& ta = value(a);
    const tensor& tr = value(row);
    if (tr.rows() != 1 || tr.cols() != ta.cols())
        throw dim_error("add_rowvec: row must be 1x" + std::to_string(ta.cols()) + ", got " +
                        tr.shape_str());
    node n;
    n.kind = op::add_rowvec;
    n.in = {idx(a, "add_rowvec"), idx(row, "add_rowvec")};
    n.arity = 2;
    n.out = ta;
    for (std::size_t i = 0; i < ta.rows(); ++i)
        for (std::size_t j = 0; j < ta.cols(); ++j)
            n.out(i, j) += tr(0, j);
    return push(std::move(n));
}

var tape::transpose(var a) {
    node n;
    n.kind = op::transpose;
    n.in = {idx(a, "transpose"), 0};
    n.arity = 1;
    n.out = transposed(value(a));
    return push(std::move(n));
}

var tape::slice_rows(var a, std::size_t begin, std::size_t end) {
    const tensor& ta = value(a);
    if (begin >= end || end > ta.rows())
        throw dim_error("slice_rows: invalid range [" + std::to_string(begin) + ", " +
                        std::to_string(end) + ") for " + ta.shape_str());
    node n;
    n.kind = op::slice_rows;
    n.in = {idx(a, "slice_rows"), 0};
    n.arity = 1;
    n.begin = begin;
    n.end = end;
    n.out = tensor(end - begin, ta.cols());
    for (std::size_t i = begin; i < end; ++i)
        for (std::size_t j = 0; j < ta.cols(); ++j)
            n.out(i - begin, j) = ta(i, j);
    return push(std::move(n));
}

var tape::sigmoid(var a) {
    node n;
    n.kind = op::sigmoid;
    n.in = {idx(a, "sigmoid"), 0};
    n.arity = 1;
    n.out = value(a);
    for (std::size_t i = 0; i < n.out.size(); ++i)
        n.out[i] = 1.0 / (1.0 + std::exp(-n.out[i]));
    return push(std::move(n));
}

var tape::tanh(var a) {
    node n;
    n.kind = op::tanh_fn;
    n.in = {idx(a, "tanh"), 0};
    n.arity = 1;
    n.out = value(a);
    for (std::size_t i = 0; i < n.out.size(); ++i)
        n.out[i] = std::tanh(n.out[i]);
    return push(std::move(n));
}

var tape::relu(var a) {
    node n;
    n.kind = op::relu;
    n.in = {idx(a, "relu"), 0};
    n.arity = 1;
    n.out = value(a);
    for (std::size_t i = 0; i < n.out.size(); ++i)
        n.out[i] = n.out[i] > 0.0 ? n.out[i] : 0.0;
    return push(std::move(n));
}

var tape::leaky_relu(var a, double slope) {
    node n;
    n.kind = op::leaky_relu;
    n.in = {idx(a, "leaky_relu"), 0};
    n.arity = 1;
    n.scalar = slope;
    n.out = value(a);
    for (std::size_t i = 0; i < n.out.size(); ++i)
        n.out[i] = n.out[i] > 0.0 ? n.out[i] : slope * n.out[i];
    return push(std::move(n));
}

// Softmax over unmasked entries per row, with max-subtraction for
// stability; masked entries are exactly 0 in the output.
var tape::row_softmax_masked(var a, bool_mask mask) {
    const tensor& ta = value(a);
    if (mask.rows() != ta.rows() || mask.cols() != ta.cols())
        throw dim_error("row_softmax_masked: mask shape " + std::to_string(mask.rows()) + "x" +
                        std::to_string(mask.cols()) + " does not match input " + ta.shape_str());
    node n;
    n.kind = op::softmax_rows;
    n.in = {idx(a, "row_softmax_masked"), 0};
    n.arity = 1;
    n.out = tensor(ta.rows(), ta.cols());
    for (std::size_t i = 0; i < ta.rows(); ++i) {
        double mx = 0.0;
        bool any = false;
        for (std::size_t j = 0; j < ta.cols(); ++j) {
            if (!mask.at(i, j)) continue;
            if (!any || ta(i, j) > mx) mx = ta(i, j);
            any = true;
        }
        if (!any)
            throw data_error("row_softmax_masked: row " + std::to_string(i) +
                             " has no unmasked entries");
        double denom = 0.0;
        for (std::size_t j = 0; j < ta.cols(); ++j)
            if (mask.at(i, j))
                denom += std::exp(ta(i, j) - mx);
        for (std::size_t j = 0; j < ta.cols(); ++j)
            if (mask.at(i, j))
                n.out(i, j) = std::exp(ta(i, j) - mx) / denom;
    }
    n.mask = std::move(mask);
    return push(std::move(n));
}

var tape::mean_all(var a) {
    const tensor& ta = value(a);
    if (ta.empty())
        throw data_error("mean_all: empty input");
    node n;
    n.kind = op::mean_all;
    n.in = {idx(a, "mean_all"), 0};
    n.arity = 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i)
        acc += ta[i];
    n.out = tensor(1, 1, acc / static_cast<double>(ta.size()));
    return push(std::move(n));
}

var tape::sum_all(var a) {
    const tensor& ta = value(a);
    if (ta.empty())
        throw data_error("sum_all: empty input");
    node n;
    n.kind = op::sum_all;
    n.in = {idx(a, "sum_all"), 0};
    n.arity = 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i)
        acc += ta[i];
    n.out = tensor(1, 1, acc);
    return push(std::move(n));
}

var tape::square(var a) {
    const tensor& ta = value(a);
    if (ta.empty())
        throw data_error("square: empty input");
    node n;
    n.kind = op::square;
    n.in = {idx(a, "square"), 0};
    n.arity = 1;
    n.out = ta;
    for (std::size_t i = 0; i < n.out.size(); ++i)
        n.out[i] *= n.out[i];
    return push(std::move(n));
}

void tape::backward(var root) {
    const std::size_t r = idx(root, "backward");
    const node& root_node = nodes_[r];
    if (root_node.out.rows() != 1 || root_node.out.cols() != 1)
        throw dim_error("backward: root must be 1x1 scalar, got " + root_node.out.shape_str());

    grads_.assign(nodes_.size(), tensor());
    for (std::size_t i = 0; i <= r; ++i)
        grads_[i] = tensor(nodes_[i].out.rows(), nodes_[i].out.cols());
    grads_[r](0, 0) = 1.0;

    for (std::size_t i = r + 1; i-- > 0;) {
        const node& nd = nodes_[i];
        const tensor& g = grads_[i];
        switch (nd.kind) {
        case op::leaf:
            break;
        case op::matmul: {
            // dA = G·Bᵀ, dB = Aᵀ·G
            add_inplace(grads_[nd.in[0]], matmul_nt(g, nodes_[nd.in[1]].out));
            add_inplace(grads_[nd.in[1]], matmul_tn(nodes_[nd.in[0]].out, g));
            break;
        }
        case op::add: {
            add_inplace(grads_[nd.in[0]], g);
            add_inplace(grads_[nd.in[1]], g);
            break;
        }
        case op::sub: {
            add_inplace(grads_[nd.in[0]], g);
            tensor& gb = grads_[nd.in[1]];
            for (std::size_t j = 0; j < gb.size(); ++j)
                gb[j] -= g[j];
            break;
        }
        case op::hadamard: {
            const tensor& a = nodes_[nd.in[0]].out;
            const tensor& b = nodes_[nd.in[1]].out;
            tensor& ga = grads_[nd.in[0]];
            tensor& gb = grads_[nd.in[1]];
            for (std::size_t j = 0; j < g.size(); ++j) {
                ga[j] += g[j] * b[j];
                gb[j] += g[j] * a[j];
            }
            break;
        }
        case op::scale: {
            tensor& ga = grads_[nd.in[0]];
            for (std::size_t j = 0; j < g.size(); ++j)
                ga[j] += nd.scalar * g[j];
            break;
        }
        case op::one_minus: {
            tensor& ga = grads_[nd.in[0]];
            for (std::size_t j = 0; j < g.size(); ++j)
                ga[j] -= g[j];
            break;
        }
        case op::add_rowvec: {
            add_inplace(grads_[nd.in[0]], g);
            tensor& gr = grads_[nd.in[1]];
            for (std::size_t row = 0; row < g.rows(); ++row)
                for (std::size_t col = 0; col < g.cols(); ++col)
                    gr(0, col) += g(row, col);
            break;
        }
        case op::transpose: {
            tensor& ga = grads_[nd.in[0]];
            for (std::size_t row = 0; row < g.rows(); ++row)
                for (std::size_t col = 0; col < g.cols(); ++col)
                    ga(col, row) += g(row, col);
            break;
        }
        case op::slice_rows: {
            tensor& ga = grads_[nd.in[0]];
            for (std::size_t row = nd.begin; row < nd.end; ++row)
                for (std::size_t col = 0; col < g.cols(); ++col)
                    ga(row, col) += g(row - nd.begin, col);
            break;
        }
        case op::sigmoid: {
            // σ' = σ(1−σ)
            tensor& ga = grads_[nd.in[0]];
            for (std::size_t j = 0; j < g.size(); ++j) {
                const double s = nd.out[j];
                ga[j] += g[j] * s * (1.0 - s);
            }
            break;
        }
        case op::tanh_fn: {
            // tanh' = 1−tanh²
            tensor& ga = grads_[nd.in[0]];
            for (std::size_t j = 0; j < g.size(); ++j) {
                const double t = nd.out[j];
                ga[j] += g[j] * (1.0 - t * t);
            }
            break;
        }
        case op::relu: {
            // relu'(0) = 0
            const tensor& x = nodes_[nd.in[0]].out;
            tensor& ga = grads_[nd.in[0]];
            for (std::size_t j = 0; j < g.size(); ++j)
                if (x[j] > 0.0)
                    ga[j] += g[j];
            break;
        }
        case op::leaky_relu: {
            const tensor& x = nodes_[nd.in[0]].out;
            tensor& ga = grads_[nd.in[0]];
            for (std::size_t j = 0; j < g.size(); ++j)
                ga[j] += g[j] * (x[j] > 0.0 ? 1.0 : nd.scalar);
            break;
        }
        case op::softmax_rows: {
            // per row: dx_j = y_j (g_j − Σ_k g_k y_k) over the mask
            tensor& ga = grads_[nd.in[0]];
            for (std::size_t row = 0; row < g.rows(); ++row) {
                double dot = 0.0;
                for (std::size_t col = 0; col < g.cols(); ++col)
                    if (nd.mask.at(row, col))
                        dot += g(row, col) * nd.out(row, col);
                for (std::size_t col = 0; col < g.cols(); ++col)
                    if (nd.mask.at(row, col))
                        ga(row, col) += nd.out(row, col) * (g(row, col) - dot);
            }
            break;
        }
        case op::mean_all: {
            const double go = g(0, 0) / static_cast<double>(nodes_[nd.in[0]].out.size());
            tensor& ga = grads_[nd.in[0]];
            for (std::size_t j = 0; j < ga.size(); ++j)
                ga[j] += go;
            break;
        }
        case op::sum_all: {
            const double go = g(0, 0);
            tensor& ga = grads_[nd.in[0]];
            for (std::size_t j = 0; j < ga.size(); ++j)
                ga[j] += go;
            break;
        }
        case op::square: {
            const tensor& x = nodes_[nd.in[0]].out;
            tensor& ga = grads_[nd.in[0]];
            for (std::size_t j = 0; j < g.size(); ++j)
                ga[j] += 2.0 * x[j] * g[j];
            break;
        }
        }
    }
    has_grads_ = true;
}

} // namespace flowcast
