#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "calibra/tensor.hpp"

namespace calibra::ad {

enum class Op : std::uint8_t {
    kLeaf,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kMatMul,
    kExp,
    kLog,
    kNeg,
    kRelu,
    kTanh,
    kSigmoid,
    kSqrt,
    kAbs,
    kPow,       // elementwise x^p for constant p
    kSumAxis,
    kSumAll,
    kMeanAxis,
    kMeanAll,
    kMaxAxis,   // evaluation only, no gradient
    kSoftmax,   // over last axis
    kLogSoftmax,
    kReshape,
    kSlice,     // contiguous range of a rank-1 tensor, viewed with a new shape
};

class Graph;

/// Handle to a node of a Graph. A default-constructed Var belongs to no
/// graph; asking for its value or gradient is an error.
class Var {
public:
    Var() = default;
    Var(Graph* g, int id) : graph_(g), id_(id) {}

    Graph* graph() const { return graph_; }
    int id() const { return id_; }
    bool in_graph() const { return graph_ != nullptr && id_ >= 0; }

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }

private:
    Graph* graph_ = nullptr;
    int id_ = -1;
};

/// Result of a backward pass: adjoints keyed by node id. Only leaves marked
/// as parameters may be queried; unused parameter leaves report zeros.
class Gradients {
public:
    Gradients(const Graph* g, std::vector<std::optional<Tensor>> adj) : graph_(g), adj_(std::move(adj)) {}

    Tensor wrt(const Var& v) const;

private:
    const Graph* graph_;
    std::vector<std::optional<Tensor>> adj_;
};

/// Append-only tape of primitive operations. Topological order equals append
/// order; the backward pass walks nodes once, in reverse append order. Graphs
/// are rebuilt every training step and are single-threaded.
class Graph {
public:
    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        Tensor value;
        bool is_param = false;
        double p = 0.0;          // kPow exponent
        int axis = -1;           // reductions
        std::size_t offset = 0;  // kSlice
    };

    Var input(Tensor v) { return emit(Node{Op::kLeaf, -1, -1, std::move(v), false}); }
    Var param(Tensor v) { return emit(Node{Op::kLeaf, -1, -1, std::move(v), true}); }
    Var constant(double v) { return input(Tensor::scalar(v)); }

    std::size_t node_count() const { return nodes_.size(); }
    const Tensor& value_of(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
    bool is_param(int id) const { return nodes_.at(static_cast<std::size_t>(id)).is_param; }

    Var emit(Node n) {
        nodes_.push_back(std::move(n));
        return Var(this, static_cast<int>(nodes_.size()) - 1);
    }

    Gradients backward(const Var& root) const;

private:
    void backprop_node(int id, std::vector<std::optional<Tensor>>& adj) const;

    static void accumulate(std::vector<std::optional<Tensor>>& adj, int id, Tensor t) {
        if (!adj[static_cast<std::size_t>(id)])
            adj[static_cast<std::size_t>(id)] = std::move(t);
        else
            adj[static_cast<std::size_t>(id)]->add_in_place(t);
    }

    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const {
    if (!in_graph()) throw std::logic_error("Var: tensor is not part of a graph");
    return graph_->value_of(id_);
}

inline Tensor Gradients::wrt(const Var& v) const {
    if (!v.in_graph() || v.graph() != graph_)
        throw std::logic_error("Gradients: tensor is not part of this graph");
    if (!graph_->is_param(v.id()))
        throw std::logic_error("Gradients: node " + std::to_string(v.id()) + " is not a parameter leaf");
    const auto idx = static_cast<std::size_t>(v.id());
    if (idx < adj_.size() && adj_[idx]) return *adj_[idx];
    return Tensor::zeros(v.shape());  // parameter unused by the root
}

// ---- op construction ----------------------------------------------------

namespace detail {

inline Graph* common_graph(const Var& a, const Var& b, const char* op) {
    if (!a.in_graph() || !b.in_graph()) throw std::invalid_argument(std::string(op) + ": operand not in a graph");
    if (a.graph() != b.graph()) throw std::invalid_argument(std::string(op) + ": operands belong to different graphs");
    return a.graph();
}

inline Tensor matmul_values(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rank() < 1 || a.rank() > 2 || b.rank() < 1 || b.rank() > 2)
        throw std::invalid_argument(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                                    shape_str(b.shape()) + " are not matmul-compatible");
    const std::size_t m = a.rank() == 2 ? a.shape()[0] : 1;
    const std::size_t ka = a.rank() == 2 ? a.shape()[1] : a.shape()[0];
    const std::size_t kb = b.shape()[0];
    const std::size_t n = b.rank() == 2 ? b.shape()[1] : 1;
    if (ka != kb)
        throw std::invalid_argument(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                                    shape_str(b.shape()) + " have mismatched inner dimensions");
    Tensor out = Tensor::zeros(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < ka; ++p) {
            const double av = a[i * ka + p];
            if (av == 0.0) continue;
            const double* brow = b.data().data() + p * n;
            double* orow = out.data().data() + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    // vector operands collapse the corresponding output axis
    if (a.rank() == 1 && b.rank() == 1) return out.reshaped(Shape{});
    if (a.rank() == 1) return out.reshaped(Shape{n});
    if (b.rank() == 1) return out.reshaped(Shape{m});
    return out;
}

}  // namespace detail

inline Var binary(Op op, const char* name, const Var& a, const Var& b) {
    Graph* g = detail::common_graph(a, b, name);
    const Tensor& ta = a.value();
    const Tensor& tb = b.value();
    Tensor out;
    switch (op) {
        case Op::kAdd: out = broadcast_apply(ta, tb, [](double x, double y) { return x + y; }, name); break;
        case Op::kSub: out = broadcast_apply(ta, tb, [](double x, double y) { return x - y; }, name); break;
        case Op::kMul: out = broadcast_apply(ta, tb, [](double x, double y) { return x * y; }, name); break;
        case Op::kDiv: out = broadcast_apply(ta, tb, [](double x, double y) { return x / y; }, name); break;
        case Op::kMatMul: out = detail::matmul_values(ta, tb, name); break;
        default: throw std::logic_error("binary: bad op");
    }
    return g->emit(Graph::Node{op, a.id(), b.id(), std::move(out)});
}

inline Var operator+(const Var& a, const Var& b) { return binary(Op::kAdd, "add", a, b); }
inline Var operator-(const Var& a, const Var& b) { return binary(Op::kSub, "sub", a, b); }
inline Var operator*(const Var& a, const Var& b) { return binary(Op::kMul, "mul", a, b); }
inline Var operator/(const Var& a, const Var& b) { return binary(Op::kDiv, "div", a, b); }
inline Var matmul(const Var& a, const Var& b) { return binary(Op::kMatMul, "matmul", a, b); }

inline Var unary(Op op, const Var& a, double p = 0.0) {
    if (!a.in_graph()) throw std::invalid_argument("unary op: operand not in a graph");
    const Tensor& t = a.value();
    Tensor out;
    switch (op) {
        case Op::kExp: out = unary_apply(t, [](double x) { return std::exp(x); }); break;
        case Op::kLog: out = unary_apply(t, [](double x) { return std::log(x); }); break;
        case Op::kNeg: out = unary_apply(t, [](double x) { return -x; }); break;
        case Op::kRelu: out = unary_apply(t, [](double x) { return x > 0.0 ? x : 0.0; }); break;
        case Op::kTanh: out = unary_apply(t, [](double x) { return std::tanh(x); }); break;
        case Op::kSigmoid: out = unary_apply(t, [](double x) { return stable_sigmoid(x); }); break;
        case Op::kSqrt: out = unary_apply(t, [](double x) { return std::sqrt(x); }); break;
        case Op::kAbs: out = unary_apply(t, [](double x) { return std::abs(x); }); break;
        case Op::kPow: out = unary_apply(t, [p](double x) { return std::pow(x, p); }); break;
        default: throw std::logic_error("unary: bad op");
    }
    return a.graph()->emit(Graph::Node{op, a.id(), -1, std::move(out), false, p});
}

inline Var exp(const Var& a) { return unary(Op::kExp, a); }
inline Var log(const Var& a) { return unary(Op::kLog, a); }
inline Var neg(const Var& a) { return unary(Op::kNeg, a); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var relu(const Var& a) { return unary(Op::kRelu, a); }
inline Var tanh(const Var& a) { return unary(Op::kTanh, a); }
inline Var sigmoid(const Var& a) { return unary(Op::kSigmoid, a); }
inline Var sqrt(const Var& a) { return unary(Op::kSqrt, a); }
inline Var abs(const Var& a) { return unary(Op::kAbs, a); }
inline Var pow(const Var& a, double p) { return unary(Op::kPow, a, p); }

namespace detail {

inline void check_axis(const Tensor& t, int axis, const char* op) {
    if (t.rank() == 0 || axis < 0 || static_cast<std::size_t>(axis) >= t.rank())
        throw std::invalid_argument(std::string(op) + ": axis " + std::to_string(axis) + " invalid for shape " +
                                    shape_str(t.shape()));
    if (t.rank() > 2) throw std::invalid_argument(std::string(op) + ": rank > 2 not supported");
    if (t.size() == 0) throw std::invalid_argument(std::string(op) + ": empty tensor " + shape_str(t.shape()));
}

inline Tensor reduce_axis_values(const Tensor& t, int axis, const char* op, bool mean, bool is_max) {
    check_axis(t, axis, op);
    if (t.rank() == 1) {
        double acc = is_max ? t[0] : 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) acc = is_max ? std::max(acc, t[i]) : acc + t[i];
        if (mean) acc /= static_cast<double>(t.size());
        return Tensor::scalar(acc);
    }
    const std::size_t rows = t.shape()[0], cols = t.shape()[1];
    if (axis == 0) {
        Tensor out = is_max ? Tensor::full(Shape{cols}, -HUGE_VAL) : Tensor::zeros(Shape{cols});
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                out[c] = is_max ? std::max(out[c], t.at(r, c)) : out[c] + t.at(r, c);
        if (mean)
            for (std::size_t c = 0; c < cols; ++c) out[c] /= static_cast<double>(rows);
        return out;
    }
    Tensor out = is_max ? Tensor::full(Shape{rows}, -HUGE_VAL) : Tensor::zeros(Shape{rows});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out[r] = is_max ? std::max(out[r], t.at(r, c)) : out[r] + t.at(r, c);
    if (mean)
        for (std::size_t r = 0; r < rows; ++r) out[r] /= static_cast<double>(cols);
    return out;
}

inline Tensor rowwise(const Tensor& t, void (*fn)(const double*, double*, std::size_t), const char* op) {
    if (t.rank() == 0 || t.rank() > 2)
        throw std::invalid_argument(std::string(op) + ": expects rank 1 or 2, got " + shape_str(t.shape()));
    const std::size_t rows = t.rank() == 2 ? t.shape()[0] : 1;
    const std::size_t k = t.rank() == 2 ? t.shape()[1] : t.size();
    Tensor out = Tensor::zeros(t.shape());
    for (std::size_t r = 0; r < rows; ++r) fn(t.data().data() + r * k, out.data().data() + r * k, k);
    return out;
}

}  // namespace detail

inline Var sum(const Var& a, int axis) {
    Tensor out = detail::reduce_axis_values(a.value(), axis, "sum", false, false);
    return a.graph()->emit(Graph::Node{Op::kSumAxis, a.id(), -1, std::move(out), false, 0.0, axis});
}
inline Var sum(const Var& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.value().size(); ++i) acc += a.value()[i];
    return a.graph()->emit(Graph::Node{Op::kSumAll, a.id(), -1, Tensor::scalar(acc)});
}
inline Var mean(const Var& a, int axis) {
    Tensor out = detail::reduce_axis_values(a.value(), axis, "mean", true, false);
    return a.graph()->emit(Graph::Node{Op::kMeanAxis, a.id(), -1, std::move(out), false, 0.0, axis});
}
inline Var mean(const Var& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.value().size(); ++i) acc += a.value()[i];
    acc /= static_cast<double>(a.value().size());
    return a.graph()->emit(Graph::Node{Op::kMeanAll, a.id(), -1, Tensor::scalar(acc)});
}

/// Max over an axis. Evaluation only: backpropagating through it throws.
/// Differentiable selection goes through the smoothed maximum in the
/// calibration module.
inline Var max_axis(const Var& a, int axis) {
    Tensor out = detail::reduce_axis_values(a.value(), axis, "max", false, true);
    return a.graph()->emit(Graph::Node{Op::kMaxAxis, a.id(), -1, std::move(out), false, 0.0, axis});
}

inline Var softmax(const Var& a) {
    Tensor out = detail::rowwise(a.value(), &softmax_row, "softmax");
    return a.graph()->emit(Graph::Node{Op::kSoftmax, a.id(), -1, std::move(out)});
}
inline Var log_softmax(const Var& a) {
    Tensor out = detail::rowwise(a.value(), &log_softmax_row, "log_softmax");
    return a.graph()->emit(Graph::Node{Op::kLogSoftmax, a.id(), -1, std::move(out)});
}

inline Var reshape(const Var& a, Shape s) {
    Tensor out = a.value().reshaped(std::move(s));
    return a.graph()->emit(Graph::Node{Op::kReshape, a.id(), -1, std::move(out)});
}

/// View of [offset, offset + numel(shape)) of a rank-1 tensor.
inline Var slice(const Var& a, std::size_t offset, Shape shape) {
    const Tensor& t = a.value();
    if (t.rank() != 1) throw std::invalid_argument("slice: expects a rank-1 tensor, got " + shape_str(t.shape()));
    const std::size_t len = numel(shape);
    if (offset + len > t.size())
        throw std::invalid_argument("slice: range [" + std::to_string(offset) + "," + std::to_string(offset + len) +
                                    ") exceeds length " + std::to_string(t.size()));
    std::vector<double> d(t.data().begin() + static_cast<std::ptrdiff_t>(offset),
                          t.data().begin() + static_cast<std::ptrdiff_t>(offset + len));
    return a.graph()->emit(Graph::Node{Op::kSlice, a.id(), -1, Tensor(std::move(shape), std::move(d)), false, 0.0, -1, offset});
}

// scalar-operand convenience
inline Var operator+(const Var& a, double c) { return a + a.graph()->constant(c); }
inline Var operator+(double c, const Var& a) { return a.graph()->constant(c) + a; }
inline Var operator-(const Var& a, double c) { return a - a.graph()->constant(c); }
inline Var operator-(double c, const Var& a) { return a.graph()->constant(c) - a; }
inline Var operator*(const Var& a, double c) { return a * a.graph()->constant(c); }
inline Var operator*(double c, const Var& a) { return a.graph()->constant(c) * a; }
inline Var operator/(const Var& a, double c) { return a / a.graph()->constant(c); }
inline Var operator/(double c, const Var& a) { return a.graph()->constant(c) / a; }

// ---- backward -----------------------------------------------------------

inline Gradients Graph::backward(const Var& root) const {
    if (!root.in_graph() || root.graph() != this)
        throw std::invalid_argument("backward: root is not part of this graph");
    if (!root.value().is_scalar())
        throw std::invalid_argument("backward: root must be scalar-shaped, got " + shape_str(root.value().shape()));
    std::vector<std::optional<Tensor>> adj(static_cast<std::size_t>(root.id()) + 1);
    adj[static_cast<std::size_t>(root.id())] = Tensor::full(root.value().shape(), 1.0);
    for (int id = root.id(); id >= 0; --id) {
        if (!adj[static_cast<std::size_t>(id)]) continue;
        backprop_node(id, adj);
    }
    return Gradients(this, std::move(adj));
}

inline void Graph::backprop_node(int id, std::vector<std::optional<Tensor>>& adj) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.op == Op::kLeaf) return;
    const Tensor& g = *adj[static_cast<std::size_t>(id)];
    const Tensor& av = nodes_[static_cast<std::size_t>(n.a)].value;
    const auto mul2 = [](double x, double y) { return x * y; };
    const auto div2 = [](double x, double y) { return x / y; };

    switch (n.op) {
        case Op::kAdd: {
            const Tensor& bv = nodes_[static_cast<std::size_t>(n.b)].value;
            accumulate(adj, n.a, reduce_to_shape(g, av.shape()));
            accumulate(adj, n.b, reduce_to_shape(g, bv.shape()));
            break;
        }
        case Op::kSub: {
            const Tensor& bv = nodes_[static_cast<std::size_t>(n.b)].value;
            accumulate(adj, n.a, reduce_to_shape(g, av.shape()));
            accumulate(adj, n.b, reduce_to_shape(unary_apply(g, [](double x) { return -x; }), bv.shape()));
            break;
        }
        case Op::kMul: {
            const Tensor& bv = nodes_[static_cast<std::size_t>(n.b)].value;
            accumulate(adj, n.a, reduce_to_shape(broadcast_apply(g, bv, mul2, "mul.grad"), av.shape()));
            accumulate(adj, n.b, reduce_to_shape(broadcast_apply(g, av, mul2, "mul.grad"), bv.shape()));
            break;
        }
        case Op::kDiv: {
            const Tensor& bv = nodes_[static_cast<std::size_t>(n.b)].value;
            accumulate(adj, n.a, reduce_to_shape(broadcast_apply(g, bv, div2, "div.grad"), av.shape()));
            Tensor goverb = broadcast_apply(g, bv, div2, "div.grad");
            Tensor gb = broadcast_apply(goverb, n.value, mul2, "div.grad");  // g*out/b = g*a/b^2
            accumulate(adj, n.b, reduce_to_shape(unary_apply(gb, [](double x) { return -x; }), bv.shape()));
            break;
        }
        case Op::kMatMul: {
            const Tensor& bv = nodes_[static_cast<std::size_t>(n.b)].value;
            const std::size_t m = av.rank() == 2 ? av.shape()[0] : 1;
            const std::size_t k = av.rank() == 2 ? av.shape()[1] : av.shape()[0];
            const std::size_t nn = bv.rank() == 2 ? bv.shape()[1] : 1;
            const Tensor g2 = g.reshaped(Shape{m, nn});
            Tensor ga = Tensor::zeros(Shape{m, k});
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < nn; ++j) {
                    const double gv = g2[i * nn + j];
                    if (gv == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gv * bv[p * nn + j];
                }
            Tensor gb = Tensor::zeros(Shape{k, nn});
            for (std::size_t p = 0; p < k; ++p)
                for (std::size_t i = 0; i < m; ++i) {
                    const double a2 = av[i * k + p];
                    if (a2 == 0.0) continue;
                    for (std::size_t j = 0; j < nn; ++j) gb[p * nn + j] += a2 * g2[i * nn + j];
                }
            accumulate(adj, n.a, ga.reshaped(av.shape()));
            accumulate(adj, n.b, gb.reshaped(bv.shape()));
            break;
        }
        case Op::kExp:
            accumulate(adj, n.a, broadcast_apply(g, n.value, mul2, "exp.grad"));
            break;
        case Op::kLog:
            accumulate(adj, n.a, broadcast_apply(g, av, div2, "log.grad"));
            break;
        case Op::kNeg:
            accumulate(adj, n.a, unary_apply(g, [](double x) { return -x; }));
            break;
        case Op::kRelu:
            accumulate(adj, n.a, broadcast_apply(g, av, [](double x, double a) { return a > 0.0 ? x : 0.0; }, "relu.grad"));
            break;
        case Op::kTanh:
            accumulate(adj, n.a, broadcast_apply(g, n.value, [](double x, double t) { return x * (1.0 - t * t); }, "tanh.grad"));
            break;
        case Op::kSigmoid:
            accumulate(adj, n.a, broadcast_apply(g, n.value, [](double x, double s) { return x * s * (1.0 - s); }, "sigmoid.grad"));
            break;
        case Op::kSqrt:
            // guarded: d sqrt(s)/ds = 1/(2 sqrt(s + eps)); the WMMCE sum can
            // reach exactly 0 and its derivative must stay finite there
            accumulate(adj, n.a,
                       broadcast_apply(g, av, [](double x, double a) { return x * 0.5 / std::sqrt(a + 1e-12); }, "sqrt.grad"));
            break;
        case Op::kAbs:
            accumulate(adj, n.a, broadcast_apply(g, av, [](double x, double a) { return a > 0.0 ? x : (a < 0.0 ? -x : 0.0); },
                                                 "abs.grad"));
            break;
        case Op::kPow: {
            const double p = n.p;
            accumulate(adj, n.a,
                       broadcast_apply(g, av, [p](double x, double a) { return x * p * std::pow(a, p - 1.0); }, "pow.grad"));
            break;
        }
        case Op::kSumAxis:
        case Op::kMeanAxis: {
            const bool is_mean = n.op == Op::kMeanAxis;
            Tensor ga = Tensor::zeros(av.shape());
            if (av.rank() == 1) {
                const double scale = is_mean ? 1.0 / static_cast<double>(av.size()) : 1.0;
                for (std::size_t i = 0; i < av.size(); ++i) ga[i] = g[0] * scale;
            } else {
                const std::size_t rows = av.shape()[0], cols = av.shape()[1];
                const double extent = static_cast<double>(n.axis == 0 ? rows : cols);
                const double scale = is_mean ? 1.0 / extent : 1.0;
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cols; ++c) ga.at(r, c) = (n.axis == 0 ? g[c] : g[r]) * scale;
            }
            accumulate(adj, n.a, std::move(ga));
            break;
        }
        case Op::kSumAll:
            accumulate(adj, n.a, Tensor::full(av.shape(), g[0]));
            break;
        case Op::kMeanAll:
            accumulate(adj, n.a, Tensor::full(av.shape(), g[0] / static_cast<double>(av.size())));
            break;
        case Op::kMaxAxis:
            throw std::logic_error("backward: max_axis is evaluation-only and has no gradient");
        case Op::kSoftmax: {
            const std::size_t rows = n.value.rank() == 2 ? n.value.shape()[0] : 1;
            const std::size_t k = n.value.rank() == 2 ? n.value.shape()[1] : n.value.size();
            Tensor ga = Tensor::zeros(av.shape());
            for (std::size_t r = 0; r < rows; ++r) {
                const double* s = n.value.data().data() + r * k;
                const double* gr = g.data().data() + r * k;
                double dot = 0.0;
                for (std::size_t i = 0; i < k; ++i) dot += gr[i] * s[i];
                double* out = ga.data().data() + r * k;
                for (std::size_t i = 0; i < k; ++i) out[i] = s[i] * (gr[i] - dot);
            }
            accumulate(adj, n.a, std::move(ga));
            break;
        }
        case Op::kLogSoftmax: {
            const std::size_t rows = n.value.rank() == 2 ? n.value.shape()[0] : 1;
            const std::size_t k = n.value.rank() == 2 ? n.value.shape()[1] : n.value.size();
            Tensor ga = Tensor::zeros(av.shape());
            for (std::size_t r = 0; r < rows; ++r) {
                const double* lsm = n.value.data().data() + r * k;
                const double* gr = g.data().data() + r * k;
                double gsum = 0.0;
                for (std::size_t i = 0; i < k; ++i) gsum += gr[i];
                double* out = ga.data().data() + r * k;
                for (std::size_t i = 0; i < k; ++i) out[i] = gr[i] - std::exp(lsm[i]) * gsum;
            }
            accumulate(adj, n.a, std::move(ga));
            break;
        }
        case Op::kReshape:
            accumulate(adj, n.a, g.reshaped(av.shape()));
            break;
        case Op::kSlice: {
            Tensor ga = Tensor::zeros(av.shape());
            for (std::size_t i = 0; i < g.size(); ++i) ga[n.offset + i] = g[i];
            accumulate(adj, n.a, std::move(ga));
            break;
        }
        case Op::kLeaf:
            break;
    }
}

}  // namespace calibra::ad
