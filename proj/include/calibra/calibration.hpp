#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "calibra/autodiff.hpp"
#include "calibra/mlp.hpp"
#include "calibra/tensor.hpp"

namespace calibra::cal {

/// Per-example decision summary: decision = argmax(probs) with lowest-index
/// tie-break, confidence = probs[decision], correctness = 1 iff the decision
/// matches the true label.
struct PredictionRecord {
    std::vector<double> probs;
    int decision = 0;
    double confidence = 0.0;
    int correctness = 0;
    int true_label = 0;
};

struct BinStat {
    std::size_t count = 0;
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    double confidence = std::numeric_limits<double>::quiet_NaN();
};

struct CalibrationReport {
    std::size_t bin_count = 0;
    std::vector<BinStat> bins;
    std::size_t n = 0;
    double ece = 0.0;
};

struct KernelSpec {
    double gamma = 0.4;  // Laplacian kernel bandwidth

    void validate() const {
        if (!(gamma > 0.0)) throw std::invalid_argument("KernelSpec: gamma must be positive");
    }

    bool operator==(const KernelSpec&) const = default;
};

struct TemperatureSpec {
    double tau_r = 0.001;  // confidence smoothing
    double tau_c = 0.01;   // correctness smoothing

    void validate() const {
        if (!(tau_r > 0.0) || !(tau_c > 0.0)) throw std::invalid_argument("TemperatureSpec: temperatures must be positive");
    }

    bool operator==(const TemperatureSpec&) const = default;
};

enum class AeceMode { kOriginal, kFullyDifferentiable };

inline std::vector<PredictionRecord> score_predictions(const ad::Tensor& probs, const std::vector<int>& labels) {
    if (probs.rank() != 2 || probs.shape()[0] != labels.size())
        throw std::invalid_argument("score_predictions: probs " + ad::shape_str(probs.shape()) + " vs " +
                                    std::to_string(labels.size()) + " labels");
    const std::size_t n = labels.size(), k = probs.shape()[1];
    const std::vector<int> decisions = ad::argmax_rows(probs);
    std::vector<PredictionRecord> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k)
            throw std::invalid_argument("score_predictions: label " + std::to_string(labels[i]) +
                                        " out of range for " + std::to_string(k) + " classes");
        PredictionRecord& r = out[i];
        r.probs.assign(probs.data().begin() + static_cast<std::ptrdiff_t>(i * k),
                       probs.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
        r.decision = decisions[i];
        r.confidence = r.probs[static_cast<std::size_t>(r.decision)];
        r.true_label = labels[i];
        r.correctness = r.decision == labels[i] ? 1 : 0;
    }
    return out;
}

/// Bin index in 1..M for the left-half-open convention ((m-1)/M, m/M], bin 1
/// closed at 0. Closed intervals as written in the usual ECE definition
/// would double-assign boundary scores.
inline std::size_t ece_bin(double confidence, std::size_t M) {
    if (confidence <= 0.0) return 1;
    const auto m = static_cast<std::size_t>(std::ceil(confidence * static_cast<double>(M)));
    return m < 1 ? 1 : (m > M ? M : m);
}

inline CalibrationReport compute_ece(const std::vector<PredictionRecord>& records, std::size_t M) {
    if (M < 1) throw std::invalid_argument("compute_ece: bin count must be >= 1");
    if (records.empty()) throw std::invalid_argument("compute_ece: empty record list");
    CalibrationReport rep;
    rep.bin_count = M;
    rep.n = records.size();
    rep.bins.assign(M, BinStat{});
    std::vector<double> rsum(M, 0.0), csum(M, 0.0);
    std::vector<std::size_t> count(M, 0);
    for (const auto& r : records) {
        const std::size_t m = ece_bin(r.confidence, M) - 1;
        count[m] += 1;
        rsum[m] += r.confidence;
        csum[m] += static_cast<double>(r.correctness);
    }
    double ece = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        rep.bins[m].count = count[m];
        if (count[m] == 0) continue;  // empty bins contribute 0
        rep.bins[m].accuracy = csum[m] / static_cast<double>(count[m]);
        rep.bins[m].confidence = rsum[m] / static_cast<double>(count[m]);
        ece += static_cast<double>(count[m]) / static_cast<double>(rep.n) *
               std::abs(rep.bins[m].accuracy - rep.bins[m].confidence);
    }
    rep.ece = ece;
    return rep;
}

struct DiagramRow {
    std::size_t bin_index = 0;  // 1-based
    double left_edge = 0.0;
    double right_edge = 0.0;
    std::size_t count = 0;
    double accuracy = std::numeric_limits<double>::quiet_NaN();   // NaN marks an empty bin
    double confidence = std::numeric_limits<double>::quiet_NaN();
};

/// One row per bin, including empty ones (accuracy/confidence absent).
inline std::vector<DiagramRow> reliability_diagram(const CalibrationReport& rep) {
    std::vector<DiagramRow> rows(rep.bin_count);
    for (std::size_t m = 0; m < rep.bin_count; ++m) {
        rows[m] = DiagramRow{m + 1,
                             static_cast<double>(m) / static_cast<double>(rep.bin_count),
                             static_cast<double>(m + 1) / static_cast<double>(rep.bin_count),
                             rep.bins[m].count,
                             rep.bins[m].accuracy,
                             rep.bins[m].confidence};
    }
    return rows;
}

inline double laplacian_kernel(double a, double b, const KernelSpec& k) {
    k.validate();
    return std::exp(-std::abs(a - b) / k.gamma);
}

namespace detail {

// Degenerate denominators (all-correct or all-wrong batches) drop their
// terms: the numerators vanish for hard scores, so the 0/0 is defined as 0.
struct WmmceTerms {
    double nc = 0.0;
    double nw = 0.0;
    bool has_correct = false;
    bool has_wrong = false;
};

inline WmmceTerms wmmce_split(const std::vector<double>& c) {
    WmmceTerms t;
    for (double ci : c) {
        if (ci < 0.0 || ci > 1.0)
            throw std::invalid_argument("wmmce: correctness score " + std::to_string(ci) + " outside [0,1]");
        t.nc += ci;
    }
    t.nw = static_cast<double>(c.size()) - t.nc;
    t.has_correct = t.nc > 0.0;
    t.has_wrong = t.nw > 0.0;
    return t;
}

}  // namespace detail

/// Weighted maximum mean calibration error over confidence scores r and
/// correctness scores c. Hard scores use c in {0,1}; soft scores in [0,1]
/// weight pair (i,j) by (1-c_i)(1-c_j), c_i c_j and c_i(1-c_j) for the
/// wrong/wrong, correct/correct and correct/wrong sums, with n_c = sum c_i.
/// For hard scores this reduces exactly to the indicator-restricted sums.
/// The square-root argument is clamped at 0 before rooting:
/// sqrt(max(s,0) + eps) - sqrt(eps), eps = 1e-12.
inline double wmmce(const std::vector<double>& r, const std::vector<double>& c, const KernelSpec& k) {
    if (r.empty()) throw std::invalid_argument("wmmce: empty score vectors");
    if (r.size() != c.size()) throw std::invalid_argument("wmmce: score vectors of different lengths");
    k.validate();
    const std::size_t n = r.size();
    const auto t = detail::wmmce_split(c);
    double wrong = 0.0, correct = 0.0, cross = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double kij = std::exp(-std::abs(r[i] - r[j]) / k.gamma);
            if (t.has_wrong) wrong += (1.0 - c[i]) * (1.0 - c[j]) * (r[i] * r[j]) * kij;
            if (t.has_correct) correct += c[i] * c[j] * ((1.0 - r[i]) * (1.0 - r[j])) * kij;
            if (t.has_correct && t.has_wrong) cross += c[i] * (1.0 - c[j]) * ((1.0 - r[i]) * r[j]) * kij;
        }
    double s = 0.0;
    if (t.has_wrong) s += wrong / (t.nw * t.nw);
    if (t.has_correct) s += correct / (t.nc * t.nc);
    if (t.has_correct && t.has_wrong) s -= 2.0 * cross / (t.nc * t.nw);
    constexpr double kEps = 1e-12;
    return std::sqrt(std::max(s, 0.0) + kEps) - std::sqrt(kEps);
}

/// Graph form; differentiable w.r.t. both score vectors.
inline ad::Var wmmce(ad::Graph& g, ad::Var r, ad::Var c, const KernelSpec& k) {
    const std::size_t n = r.value().size();
    if (n == 0) throw std::invalid_argument("wmmce: empty score vectors");
    if (c.value().size() != n) throw std::invalid_argument("wmmce: score vectors of different lengths");
    k.validate();
    const auto t = detail::wmmce_split(c.value().data());

    ad::Var ri = ad::reshape(r, ad::Shape{n, 1});
    ad::Var rj = ad::reshape(r, ad::Shape{1, n});
    ad::Var ci = ad::reshape(c, ad::Shape{n, 1});
    ad::Var cj = ad::reshape(c, ad::Shape{1, n});
    ad::Var kmat = ad::exp(ad::neg(ad::abs(ri - rj)) / k.gamma);

    ad::Var nc = ad::sum(c);
    ad::Var nw = static_cast<double>(n) - nc;
    ad::Var s = g.constant(0.0);
    if (t.has_wrong) s = s + ad::sum(((1.0 - ci) * (1.0 - cj)) * (ri * rj) * kmat) / (nw * nw);
    if (t.has_correct) s = s + ad::sum((ci * cj) * ((1.0 - ri) * (1.0 - rj)) * kmat) / (nc * nc);
    if (t.has_correct && t.has_wrong) s = s - 2.0 * ad::sum((ci * (1.0 - cj)) * ((1.0 - ri) * rj) * kmat) / (nc * nw);
    constexpr double kEps = 1e-12;
    return ad::sqrt(ad::relu(s) + kEps) - std::sqrt(kEps);
}

/// Smoothed maximum over candidate confidence scores (temperature tau_r):
/// rhat = sum_y p(y) softmax(p / tau_r)_y. Recovers max(p) as tau_r -> 0.
inline double smoothed_confidence(const std::vector<double>& probs, double tau_r) {
    if (probs.empty()) throw std::invalid_argument("smoothed_confidence: empty probability vector");
    if (!(tau_r > 0.0)) throw std::invalid_argument("smoothed_confidence: tau_r must be positive");
    std::vector<double> scaled(probs.size()), soft(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) scaled[i] = probs[i] / tau_r;
    ad::softmax_row(scaled.data(), soft.data(), probs.size());
    double out = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) out += probs[i] * soft[i];
    return out;
}

/// Batch graph form: probs [B,K] -> rhat [B].
inline ad::Var smoothed_confidences(ad::Graph& g, ad::Var probs, double tau_r) {
    (void)g;
    if (!(tau_r > 0.0)) throw std::invalid_argument("smoothed_confidences: tau_r must be positive");
    ad::Var soft = ad::softmax(probs / tau_r);
    return ad::sum(probs * soft, 1);
}

/// Differentiable correctness via the soft rank
/// Rhat_y = 1 + sum_{y' != y} sigmoid((p(y') - p(y)) / tau_c),
/// chat = ReLU(2 - Rhat_{y_true}), clamped to [0,1] (zero gradient in the
/// clamped region). Recovers the hard correctness score as tau_c -> 0.
inline double smoothed_correctness(const std::vector<double>& probs, int label, double tau_c) {
    if (probs.empty()) throw std::invalid_argument("smoothed_correctness: empty probability vector");
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
        throw std::invalid_argument("smoothed_correctness: label out of range");
    if (!(tau_c > 0.0)) throw std::invalid_argument("smoothed_correctness: tau_c must be positive");
    const double p_true = probs[static_cast<std::size_t>(label)];
    double s = 0.0;  // includes y' == y, whose sigmoid(0) = 0.5 is removed below
    for (double p : probs) s += ad::stable_sigmoid((p - p_true) / tau_c);
    const double rhat = (s - 0.5) + 1.0;
    const double chat = std::max(2.0 - rhat, 0.0);
    return 1.0 - std::max(1.0 - chat, 0.0);
}

/// Batch graph form: probs [B,K] -> chat [B].
inline ad::Var smoothed_correctness(ad::Graph& g, ad::Var probs, const std::vector<int>& labels, double tau_c) {
    if (!(tau_c > 0.0)) throw std::invalid_argument("smoothed_correctness: tau_c must be positive");
    const std::size_t b = probs.value().shape()[0], k = probs.value().shape()[1];
    ad::Var mask = g.input(models::onehot(labels, k));
    ad::Var p_true = ad::reshape(ad::sum(probs * mask, 1), ad::Shape{b, 1});
    // the y' == y term contributes sigmoid(0) = 0.5 exactly and no gradient
    ad::Var s = ad::sum(ad::sigmoid((probs - p_true) / tau_c), 1);
    ad::Var rhat = (s - 0.5) + 1.0;
    ad::Var chat = ad::relu(2.0 - rhat);
    return 1.0 - ad::relu(1.0 - chat);
}

/// Differentiable approximation of the ECE for model p(y|x,theta): the WMMCE
/// over per-example confidence/correctness scores of the batch.
///
/// kFullyDifferentiable uses the smoothed scores, so gradients flow through
/// the decision as well. kOriginal uses hard scores: correctness is constant
/// and confidence gradients flow only through p(yhat|x,theta) with the
/// decision yhat taken from the forward values and then held fixed.
inline ad::Var aece(ad::Graph& g, const models::MlpSpec& spec, ad::Var theta, const ad::Tensor& x,
                    const std::vector<int>& labels, const KernelSpec& k, const TemperatureSpec& t, AeceMode mode) {
    if (labels.size() < 2) throw std::invalid_argument("aece: pairwise metric needs a batch of size >= 2");
    t.validate();
    ad::Var probs = models::predict_probs(g, spec, theta, x);
    ad::Var r, c;
    if (mode == AeceMode::kFullyDifferentiable) {
        r = smoothed_confidences(g, probs, t.tau_r);
        c = smoothed_correctness(g, probs, labels, t.tau_c);
    } else {
        const std::vector<int> decisions = ad::argmax_rows(probs.value());
        ad::Var mask = g.input(models::onehot(decisions, spec.class_count));
        r = ad::sum(probs * mask, 1);
        std::vector<double> correct(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) correct[i] = decisions[i] == labels[i] ? 1.0 : 0.0;
        c = g.input(ad::Tensor::vector(std::move(correct)));
    }
    return wmmce(g, r, c, k);
}

inline double aece(const models::MlpSpec& spec, const models::ParamVector& theta, const ad::Tensor& x,
                   const std::vector<int>& labels, const KernelSpec& k, const TemperatureSpec& t, AeceMode mode) {
    ad::Graph g;
    ad::Var tv = g.input(ad::Tensor::vector(theta.values));
    return aece(g, spec, tv, x, labels, k, t, mode).value().scalar_value();
}

}  // namespace calibra::cal
