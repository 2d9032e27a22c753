#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace calibra::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string r = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) r += ",";
        r += std::to_string(s[i]);
    }
    return r + "]";
}

/// Dense row-major tensor of doubles. Rank 0 (single element) represents a
/// scalar. Plain value type; participation in a differentiation graph is
/// handled by Var/Graph in autodiff.hpp.
class Tensor {
public:
    Tensor() : data_(1, 0.0) {}

    Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (numel(shape_) != data_.size())
            throw std::invalid_argument("Tensor: shape " + shape_str(shape_) + " does not match data length " +
                                        std::to_string(data_.size()));
    }

    static Tensor scalar(double v) { return Tensor(Shape{}, {v}); }
    static Tensor zeros(Shape shape) {
        std::vector<double> d(numel(shape), 0.0);
        return Tensor(std::move(shape), std::move(d));
    }
    static Tensor full(Shape shape, double v) {
        std::vector<double> d(numel(shape), v);
        return Tensor(std::move(shape), std::move(d));
    }
    static Tensor vector(std::vector<double> v) {
        Shape s{v.size()};
        return Tensor(std::move(s), std::move(v));
    }
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
        return Tensor(Shape{rows, cols}, std::move(data));
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool is_scalar() const { return data_.size() == 1; }

    double scalar_value() const {
        if (!is_scalar()) throw std::logic_error("Tensor: scalar_value on shape " + shape_str(shape_));
        return data_[0];
    }

    std::size_t rows() const { return rank() == 2 ? shape_[0] : (rank() == 1 ? shape_[0] : 1); }
    std::size_t cols() const { return rank() == 2 ? shape_[1] : 1; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    Tensor reshaped(Shape s) const {
        if (numel(s) != data_.size())
            throw std::invalid_argument("reshape: " + shape_str(shape_) + " to incompatible " + shape_str(s));
        return Tensor(std::move(s), data_);
    }

    void add_in_place(const Tensor& o) {
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    }

private:
    Shape shape_;
    std::vector<double> data_;
};

// ---- broadcasting -----------------------------------------------------
//
// NumPy-style: shapes align from the right, each pair of extents must be
// equal or one of them 1. Covers the cases the models need: same shape,
// matrix + row vector (bias), column vs row ([n,1] vs [1,n]) for pairwise
// grids, and scalars against anything.

inline Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
    const std::size_t ra = a.size(), rb = b.size(), r = std::max(ra, rb);
    Shape out(r);
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t da = i < ra ? a[ra - 1 - i] : 1;
        const std::size_t db = i < rb ? b[rb - 1 - i] : 1;
        if (da != db && da != 1 && db != 1)
            throw std::invalid_argument(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                                        " are not broadcast-compatible");
        out[r - 1 - i] = std::max(da, db);
    }
    return out;
}

namespace detail {

// Strides of `in` aligned to the (right-aligned) broadcast rank, 0 on
// broadcast axes.
inline std::vector<std::size_t> broadcast_strides(const Shape& in, std::size_t out_rank) {
    std::vector<std::size_t> st(out_rank, 0);
    std::size_t run = 1;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const std::size_t dim = in[in.size() - 1 - i];
        st[out_rank - 1 - i] = (dim == 1) ? 0 : run;
        run *= dim;
    }
    return st;
}

}  // namespace detail

template <class F>
Tensor broadcast_apply(const Tensor& a, const Tensor& b, F&& f, const char* op) {
    if (a.same_shape(b)) {
        Tensor out = Tensor::zeros(a.shape());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
        return out;
    }
    const Shape os = broadcast_shape(a.shape(), b.shape(), op);
    const std::size_t rank = os.size(), n = numel(os);
    const auto sa = detail::broadcast_strides(a.shape(), rank);
    const auto sb = detail::broadcast_strides(b.shape(), rank);
    Tensor out = Tensor::zeros(os);
    std::vector<std::size_t> idx(rank, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t o = 0; o < n; ++o) {
        out[o] = f(a[ia], b[ib]);
        for (std::size_t d = rank; d-- > 0;) {
            ++idx[d];
            ia += sa[d];
            ib += sb[d];
            if (idx[d] < os[d]) break;
            idx[d] = 0;
            ia -= sa[d] * os[d];
            ib -= sb[d] * os[d];
        }
    }
    return out;
}

/// Sum `g` over the axes that were broadcast to reach it, so the result has
/// shape `target`. Inverse of broadcasting, used by gradient accumulation.
inline Tensor reduce_to_shape(const Tensor& g, const Shape& target) {
    if (g.shape() == target) return g;
    const std::size_t rank = g.rank();
    const auto st = detail::broadcast_strides(target, rank);
    Tensor out = Tensor::zeros(target);
    std::vector<std::size_t> idx(rank, 0);
    std::size_t it = 0;
    for (std::size_t o = 0; o < g.size(); ++o) {
        out[it] += g[o];
        for (std::size_t d = rank; d-- > 0;) {
            ++idx[d];
            it += st[d];
            if (idx[d] < g.shape()[d]) break;
            idx[d] = 0;
            it -= st[d] * g.shape()[d];
        }
    }
    return out;
}

template <class F>
Tensor unary_apply(const Tensor& a, F&& f) {
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

// ---- small dense kernels ----------------------------------------------

inline double stable_sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline void softmax_row(const double* z, double* out, std::size_t k) {
    double m = z[0];
    for (std::size_t i = 1; i < k; ++i) m = std::max(m, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = std::exp(z[i] - m);
        sum += out[i];
    }
    for (std::size_t i = 0; i < k; ++i) out[i] /= sum;
}

inline void log_softmax_row(const double* z, double* out, std::size_t k) {
    double m = z[0];
    for (std::size_t i = 1; i < k; ++i) m = std::max(m, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += std::exp(z[i] - m);
    const double lse = m + std::log(sum);
    for (std::size_t i = 0; i < k; ++i) out[i] = z[i] - lse;
}

/// Argmax over the last axis with lowest-index tie-break.
inline std::vector<int> argmax_rows(const Tensor& t) {
    const std::size_t rows = t.rank() == 2 ? t.shape()[0] : 1;
    const std::size_t k = t.rank() == 2 ? t.shape()[1] : t.size();
    std::vector<int> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = t.data().data() + r * k;
        int best = 0;
        for (std::size_t i = 1; i < k; ++i)
            if (row[i] > row[best]) best = static_cast<int>(i);
        out[r] = best;
    }
    return out;
}

}  // namespace calibra::ad
