#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "calibra/rng.hpp"
#include "calibra/tensor.hpp"

namespace calibra::data {

struct Dataset {
    ad::Tensor inputs;        // n x d, row-major
    std::vector<int> labels;  // in [0, class_count)
    std::size_t class_count = 0;
    std::string split_tag = "train";

    std::size_t n() const { return labels.size(); }
    std::size_t dim() const { return inputs.rank() == 2 ? inputs.shape()[1] : 0; }

    void validate() const {
        if (labels.empty()) throw std::invalid_argument("Dataset: empty");
        if (inputs.rank() != 2 || inputs.shape()[0] != labels.size())
            throw std::invalid_argument("Dataset: inputs " + ad::shape_str(inputs.shape()) + " vs " +
                                        std::to_string(labels.size()) + " labels");
        for (int y : labels)
            if (y < 0 || static_cast<std::size_t>(y) >= class_count)
                throw std::invalid_argument("Dataset: label " + std::to_string(y) + " out of range");
        for (double v : inputs.data())
            if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite input value");
    }
};

namespace detail {

// Class centers, mutually well separated with nearest-neighbor distance
// `separation`: a regular simplex when the dimension allows (K <= d+1), a
// regular K-gon in the first two coordinates otherwise, both under a seeded
// rotation.
inline std::vector<std::vector<double>> blob_centers(std::size_t K, std::size_t d, double separation,
                                                     rng::Stream& stream) {
    std::vector<std::vector<double>> centers(K, std::vector<double>(d, 0.0));
    if (d == 1) {
        for (std::size_t k = 0; k < K; ++k)
            centers[k][0] = (static_cast<double>(k) - 0.5 * static_cast<double>(K - 1)) * separation;
        return centers;
    }
    if (K <= d + 1) {
        // Helmert coordinates of the centered standard simplex (edge sqrt(2)),
        // scaled to the requested edge length.
        const double scale = separation / std::numbers::sqrt2;
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t j = 1; j < K; ++j) {
                const double denom = std::sqrt(static_cast<double>(j) * static_cast<double>(j + 1));
                double coord = 0.0;
                if (k < j)
                    coord = 1.0 / denom;
                else if (k == j)
                    coord = -static_cast<double>(j) / denom;
                centers[k][j - 1] = scale * coord;
            }
    } else {
        const double radius = separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(K)));
        for (std::size_t k = 0; k < K; ++k) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(K);
            centers[k][0] = radius * std::cos(angle);
            centers[k][1] = radius * std::sin(angle);
        }
    }
    // seeded rotation: compose Givens rotations over all coordinate pairs
    for (std::size_t i = 0; i + 1 < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double a = 2.0 * std::numbers::pi * stream.uniform();
            const double ca = std::cos(a), sa = std::sin(a);
            for (auto& c : centers) {
                const double xi = c[i], xj = c[j];
                c[i] = ca * xi - sa * xj;
                c[j] = sa * xi + ca * xj;
            }
        }
    return centers;
}

}  // namespace detail

/// K unit-variance Gaussian clusters with n_per_class points each; a
/// label_noise_rate fraction of labels is resampled uniformly over the K
/// classes (so the flip probability is rate * (K-1)/K).
inline Dataset synth_gaussian_blobs(std::size_t K, std::size_t n_per_class, std::size_t d, double separation,
                                    double label_noise_rate, std::uint64_t seed) {
    if (K < 2) throw std::invalid_argument("synth_gaussian_blobs: K must be >= 2");
    if (d < 1) throw std::invalid_argument("synth_gaussian_blobs: d must be >= 1");
    if (n_per_class < 1) throw std::invalid_argument("synth_gaussian_blobs: n_per_class must be >= 1");
    if (!(label_noise_rate >= 0.0 && label_noise_rate < 0.5))
        throw std::invalid_argument("synth_gaussian_blobs: label_noise_rate must be in [0, 0.5)");

    auto center_stream = rng::derive(seed, {rng::kDataSynth, 0});
    auto point_stream = rng::derive(seed, {rng::kDataSynth, 1});
    auto noise_stream = rng::derive(seed, {rng::kDataSynth, 2});
    const auto centers = detail::blob_centers(K, d, separation, center_stream);

    const std::size_t n = K * n_per_class;
    Dataset ds;
    ds.class_count = K;
    ds.labels.resize(n);
    ds.inputs = ad::Tensor::zeros(ad::Shape{n, d});
    std::size_t row = 0;
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
            ds.labels[row] = static_cast<int>(k);
            for (std::size_t c = 0; c < d; ++c) ds.inputs.at(row, c) = centers[k][c] + point_stream.normal();
        }
    for (std::size_t i = 0; i < n; ++i)
        if (noise_stream.uniform() < label_noise_rate) ds.labels[i] = static_cast<int>(noise_stream.below(K));
    return ds;
}

/// Comma-delimited file with one header row; numeric feature columns plus
/// one integer label column named `label_column`. Rows keep file order.
inline Dataset load_csv(const std::string& path, const std::string& label_column, std::size_t K) {
    if (K < 2) throw std::invalid_argument("load_csv: K must be >= 2");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    auto split_line = [](const std::string& line) {
        std::vector<std::string> cells;
        std::string cell;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        return cells;
    };
    auto fail = [&](std::size_t lineno, const std::string& msg) -> void {
        throw std::runtime_error("load_csv: " + path + ":" + std::to_string(lineno) + ": " + msg);
    };

    std::string line;
    if (!std::getline(in, line)) fail(1, "empty file");
    const auto header = split_line(line);
    std::size_t label_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == label_column) label_idx = i;
    if (label_idx == header.size()) fail(1, "label column '" + label_column + "' not found");
    const std::size_t d = header.size() - 1;
    if (d == 0) fail(1, "no feature columns");

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            fail(lineno, "expected " + std::to_string(header.size()) + " columns, got " + std::to_string(cells.size()));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            std::size_t pos = 0;
            if (i == label_idx) {
                long y = 0;
                try {
                    y = std::stol(cells[i], &pos);
                } catch (const std::exception&) {
                    fail(lineno, "cannot parse label '" + cells[i] + "'");
                }
                if (pos != cells[i].size()) fail(lineno, "cannot parse label '" + cells[i] + "'");
                if (y < 0 || static_cast<std::size_t>(y) >= K)
                    fail(lineno, "label " + std::to_string(y) + " out of range [0," + std::to_string(K) + ")");
                labels.push_back(static_cast<int>(y));
            } else {
                double v = 0.0;
                try {
                    v = std::stod(cells[i], &pos);
                } catch (const std::exception&) {
                    fail(lineno, "cannot parse value '" + cells[i] + "'");
                }
                if (pos != cells[i].size()) fail(lineno, "cannot parse value '" + cells[i] + "'");
                if (!std::isfinite(v)) fail(lineno, "non-finite value");
                values.push_back(v);
            }
        }
    }
    if (labels.empty()) fail(lineno, "no data rows");

    Dataset ds;
    ds.class_count = K;
    ds.labels = std::move(labels);
    ds.inputs = ad::Tensor(ad::Shape{ds.labels.size(), d}, std::move(values));
    return ds;
}

inline Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows, std::string tag) {
    Dataset out;
    out.class_count = ds.class_count;
    out.split_tag = std::move(tag);
    out.labels.reserve(rows.size());
    const std::size_t d = ds.dim();
    out.inputs = ad::Tensor::zeros(ad::Shape{rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.labels.push_back(ds.labels[rows[i]]);
        for (std::size_t c = 0; c < d; ++c) out.inputs.at(i, c) = ds.inputs.at(rows[i], c);
    }
    return out;
}

/// Seeded permutation, then prefix (train) / suffix (test) split.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("split: test_fraction must be in (0,1)");
    ds.validate();
    const std::size_t n = ds.n();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    auto stream = rng::derive(seed, {rng::kSplit});
    rng::shuffle(perm, stream);
    std::size_t test_n = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    test_n = std::clamp<std::size_t>(test_n, 1, n - 1);
    const std::vector<std::size_t> train_rows(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(test_n));
    const std::vector<std::size_t> test_rows(perm.end() - static_cast<std::ptrdiff_t>(test_n), perm.end());
    return {take_rows(ds, train_rows, "train"), take_rows(ds, test_rows, "test")};
}

/// Standardize features to per-column mean 0 / std 1, with the statistics
/// computed on the train split and applied to both splits.
inline void standardize(Dataset& train, Dataset& test) {
    const std::size_t d = train.dim(), n = train.n();
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += train.inputs.at(i, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dv = train.inputs.at(i, c) - mean;
            var += dv * dv;
        }
        var /= static_cast<double>(n);
        const double sd = std::sqrt(var);
        const double scale = sd > 1e-12 ? 1.0 / sd : 1.0;
        for (std::size_t i = 0; i < n; ++i) train.inputs.at(i, c) = (train.inputs.at(i, c) - mean) * scale;
        for (std::size_t i = 0; i < test.n(); ++i) test.inputs.at(i, c) = (test.inputs.at(i, c) - mean) * scale;
    }
}

/// Per-epoch mini-batch index slices: a seeded shuffle chunked by
/// batch_size; the last, possibly smaller batch is kept.
inline std::vector<std::vector<std::size_t>> batches(std::size_t n, std::size_t batch_size, std::uint64_t epoch_seed) {
    if (batch_size < 1) throw std::invalid_argument("batches: batch_size must be >= 1");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    auto stream = rng::derive(epoch_seed, {rng::kShuffle});
    rng::shuffle(perm, stream);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        out.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start), perm.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

}  // namespace calibra::data
