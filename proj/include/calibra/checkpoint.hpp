#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "calibra/mlp.hpp"
#include "calibra/variational.hpp"

namespace calibra::cli {

/// Posterior checkpoint: versioned binary with a magic header and explicit
/// field lengths. All integers little-endian; doubles as little-endian
/// IEEE-754 bit patterns.
///
///   "CABN" | u32 version | u8 activation | u64 input_dim
///   | u64 hidden_count | u64 hidden[...] | u64 class_count
///   | f64 prior_mean | f64 prior_std | u64 seed
///   | u64 N | f64 mu[N] | f64 rho[N]
struct Checkpoint {
    models::MlpSpec spec;
    vi::GaussianPrior prior;
    std::uint64_t seed = 0;
    vi::VariationalPosterior posterior;
};

namespace detail {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kMagic[4] = {'C', 'A', 'B', 'N'};

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos++])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
};

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& c) {
    using namespace detail;
    if (c.posterior.dim() != c.spec.param_count())
        throw std::invalid_argument("checkpoint: posterior size does not match spec");
    std::string out(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    out.push_back(c.spec.activation == models::Activation::kRelu ? 0 : 1);
    put_u64(out, c.spec.input_dim);
    put_u64(out, c.spec.hidden_dims.size());
    for (std::size_t h : c.spec.hidden_dims) put_u64(out, h);
    put_u64(out, c.spec.class_count);
    put_f64(out, c.prior.mean);
    put_f64(out, c.prior.std);
    put_u64(out, c.seed);
    put_u64(out, c.posterior.dim());
    for (double v : c.posterior.mu) put_f64(out, v);
    for (double v : c.posterior.rho) put_f64(out, v);
    return out;
}

inline Checkpoint decode_checkpoint(const std::string& buf) {
    using namespace detail;
    Reader r{buf};
    r.need(4);
    if (buf.compare(0, 4, kMagic, 4) != 0) throw std::runtime_error("checkpoint: bad magic header");
    r.pos = 4;
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint c;
    c.spec.activation = r.u8() == 0 ? models::Activation::kRelu : models::Activation::kTanh;
    c.spec.input_dim = r.u64();
    const std::uint64_t hidden = r.u64();
    if (hidden > 1024) throw std::runtime_error("checkpoint: implausible hidden layer count");
    c.spec.hidden_dims.resize(hidden);
    for (auto& h : c.spec.hidden_dims) h = r.u64();
    c.spec.class_count = r.u64();
    c.prior.mean = r.f64();
    c.prior.std = r.f64();
    c.seed = r.u64();
    const std::uint64_t n = r.u64();
    c.spec.validate();
    if (n != c.spec.param_count()) throw std::runtime_error("checkpoint: parameter count does not match spec");
    c.posterior.mu.resize(n);
    for (auto& v : c.posterior.mu) v = r.f64();
    c.posterior.rho.resize(n);
    for (auto& v : c.posterior.rho) v = r.f64();
    if (r.pos != buf.size()) throw std::runtime_error("checkpoint: trailing bytes");
    return c;
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(buf);
}

}  // namespace calibra::cli
