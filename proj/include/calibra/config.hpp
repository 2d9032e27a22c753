#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "calibra/mlp.hpp"
#include "calibra/training.hpp"

namespace calibra::cli {

struct DataConfig {
    enum class Source { kSynthetic, kCsv };
    Source source = Source::kSynthetic;
    std::size_t synth_classes = 4;
    std::size_t synth_per_class = 500;
    std::size_t synth_dim = 2;
    double synth_separation = 4.0;
    double synth_noise = 0.2;
    std::string csv_path;
    std::string csv_label_column = "label";
    std::size_t csv_classes = 2;
    std::uint64_t data_seed = 0;  // 0: derive from the run seed
    double test_fraction = 0.2;
    bool standardize = true;

    bool operator==(const DataConfig&) const = default;
};

/// Everything a run needs, with the shipped defaults. The parsed file is
/// echoed back fully defaulted into the output directory so the effective
/// configuration is always on disk.
struct ExperimentConfig {
    training::TrainConfig train;
    std::vector<std::size_t> hidden_dims = {64, 32};
    models::Activation activation = models::Activation::kRelu;
    DataConfig data;
    std::string out_dir = "out";
    int threads = 1;
    std::vector<double> sweep_lambdas = {0.0, 1.0, 5.0, 10.0};
    std::vector<std::uint64_t> seeds = {1};

    bool operator==(const ExperimentConfig&) const = default;

    void validate() const {
        train.validate();
        if (hidden_dims.empty()) throw std::invalid_argument("config: hidden_dims must be non-empty");
        for (std::size_t h : hidden_dims)
            if (h == 0) throw std::invalid_argument("config: hidden_dims entries must be positive");
        if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
        if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
        if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0))
            throw std::invalid_argument("config: test_fraction must be in (0,1)");
        if (data.source == DataConfig::Source::kCsv) {
            if (data.csv_path.empty()) throw std::invalid_argument("config: csv_path required for data_source = csv");
            if (!std::filesystem::exists(data.csv_path))
                throw std::invalid_argument("config: csv_path '" + data.csv_path + "' does not exist");
            if (data.csv_classes < 2) throw std::invalid_argument("config: csv_classes must be >= 2");
        } else {
            if (data.synth_classes < 2) throw std::invalid_argument("config: synth_classes must be >= 2");
            if (data.synth_dim < 1) throw std::invalid_argument("config: synth_dim must be >= 1");
            if (!(data.synth_noise >= 0.0 && data.synth_noise < 0.5))
                throw std::invalid_argument("config: synth_noise must be in [0, 0.5)");
        }
    }
};

// ---- enum <-> string ------------------------------------------------------

namespace detail {

inline std::string objective_name(training::Objective o) {
    switch (o) {
        case training::Objective::kFnn: return "fnn";
        case training::Objective::kCaFnn: return "ca-fnn";
        case training::Objective::kBnn: return "bnn";
        case training::Objective::kCaBnn: return "ca-bnn";
    }
    return "fnn";
}

inline training::Objective objective_from(const std::string& s) {
    if (s == "fnn") return training::Objective::kFnn;
    if (s == "ca-fnn") return training::Objective::kCaFnn;
    if (s == "bnn") return training::Objective::kBnn;
    if (s == "ca-bnn") return training::Objective::kCaBnn;
    throw std::invalid_argument("config: unknown objective '" + s + "'");
}

inline std::string optimizer_name(opt::Method m) {
    switch (m) {
        case opt::Method::kSgd: return "sgd";
        case opt::Method::kRmsprop: return "rmsprop";
        case opt::Method::kAdam: return "adam";
    }
    return "sgd";
}

inline opt::Method optimizer_from(const std::string& s) {
    if (s == "sgd") return opt::Method::kSgd;
    if (s == "rmsprop") return opt::Method::kRmsprop;
    if (s == "adam") return opt::Method::kAdam;
    throw std::invalid_argument("config: unknown optimizer '" + s + "'");
}

inline std::string aece_mode_name(cal::AeceMode m) {
    return m == cal::AeceMode::kOriginal ? "original" : "fully-differentiable";
}

inline cal::AeceMode aece_mode_from(const std::string& s) {
    if (s == "original") return cal::AeceMode::kOriginal;
    if (s == "fully-differentiable") return cal::AeceMode::kFullyDifferentiable;
    throw std::invalid_argument("config: unknown aece_mode '" + s + "'");
}

inline std::string activation_name(models::Activation a) {
    return a == models::Activation::kRelu ? "relu" : "tanh";
}

inline models::Activation activation_from(const std::string& s) {
    if (s == "relu") return models::Activation::kRelu;
    if (s == "tanh") return models::Activation::kTanh;
    throw std::invalid_argument("config: unknown activation '" + s + "'");
}

inline std::string source_name(DataConfig::Source s) {
    return s == DataConfig::Source::kSynthetic ? "synthetic" : "csv";
}

inline DataConfig::Source source_from(const std::string& s) {
    if (s == "synthetic") return DataConfig::Source::kSynthetic;
    if (s == "csv") return DataConfig::Source::kCsv;
    throw std::invalid_argument("config: unknown data_source '" + s + "'");
}

inline std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "': cannot parse number '" + v + "'");
    }
    if (pos != v.size()) throw std::invalid_argument("config: key '" + key + "': cannot parse number '" + v + "'");
    return x;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    unsigned long long x = 0;
    try {
        x = std::stoull(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "': cannot parse integer '" + v + "'");
    }
    if (pos != v.size()) throw std::invalid_argument("config: key '" + key + "': cannot parse integer '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw std::invalid_argument("config: key '" + key + "': expected true/false, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(v);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return out;
}

template <class T>
std::string join_list(const std::vector<T>& v, std::string (*fmt)(T)) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += fmt(v[i]);
    }
    return out;
}

}  // namespace detail

/// Canonical echo of an effective config; parses back to an equal config.
inline std::string serialize_config(const ExperimentConfig& c) {
    using namespace detail;
    std::ostringstream out;
    out << "# calibra experiment configuration (effective values)\n";
    out << "objective = " << objective_name(c.train.objective) << "\n";
    out << "lambda = " << fmt_g(c.train.lambda) << "\n";
    out << "beta = " << fmt_g(c.train.beta) << "\n";
    out << "ensemble_train = " << c.train.ensemble_train << "\n";
    out << "ensemble_eval = " << c.train.ensemble_eval << "\n";
    out << "optimizer = " << optimizer_name(c.train.optimizer.method) << "\n";
    out << "lr = " << fmt_g(c.train.optimizer.lr) << "\n";
    out << "rmsprop_decay = " << fmt_g(c.train.optimizer.rmsprop_decay) << "\n";
    out << "momentum = " << fmt_g(c.train.optimizer.momentum) << "\n";
    out << "adam_beta1 = " << fmt_g(c.train.optimizer.adam_beta1) << "\n";
    out << "adam_beta2 = " << fmt_g(c.train.optimizer.adam_beta2) << "\n";
    out << "opt_epsilon = " << fmt_g(c.train.optimizer.epsilon) << "\n";
    out << "batch_size = " << c.train.batch_size << "\n";
    out << "epochs = " << c.train.epochs << "\n";
    out << "seed = " << c.train.seed << "\n";
    out << "kernel_gamma = " << fmt_g(c.train.kernel.gamma) << "\n";
    out << "tau_r = " << fmt_g(c.train.temps.tau_r) << "\n";
    out << "tau_c = " << fmt_g(c.train.temps.tau_c) << "\n";
    out << "aece_mode = " << aece_mode_name(c.train.aece_mode) << "\n";
    out << "bins = " << c.train.bin_count << "\n";
    out << "prior_mean = " << fmt_g(c.train.prior.mean) << "\n";
    out << "prior_std = " << fmt_g(c.train.prior.std) << "\n";
    out << "posterior_init_std = " << fmt_g(c.train.posterior_init_std) << "\n";
    out << "hidden_dims = "
        << join_list<std::size_t>(c.hidden_dims, +[](std::size_t v) { return std::to_string(v); }) << "\n";
    out << "activation = " << activation_name(c.activation) << "\n";
    out << "data_source = " << source_name(c.data.source) << "\n";
    out << "synth_classes = " << c.data.synth_classes << "\n";
    out << "synth_per_class = " << c.data.synth_per_class << "\n";
    out << "synth_dim = " << c.data.synth_dim << "\n";
    out << "synth_separation = " << fmt_g(c.data.synth_separation) << "\n";
    out << "synth_noise = " << fmt_g(c.data.synth_noise) << "\n";
    out << "csv_path = " << c.data.csv_path << "\n";
    out << "csv_label_column = " << c.data.csv_label_column << "\n";
    out << "csv_classes = " << c.data.csv_classes << "\n";
    out << "data_seed = " << c.data.data_seed << "\n";
    out << "test_fraction = " << fmt_g(c.data.test_fraction) << "\n";
    out << "standardize = " << (c.data.standardize ? "true" : "false") << "\n";
    out << "out_dir = " << c.out_dir << "\n";
    out << "threads = " << c.threads << "\n";
    out << "sweep_lambdas = " << join_list<double>(c.sweep_lambdas, +[](double v) { return detail::fmt_g(v); }) << "\n";
    out << "seeds = "
        << join_list<std::uint64_t>(c.seeds, +[](std::uint64_t v) { return std::to_string(v); }) << "\n";
    return out.str();
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    using namespace detail;
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) + ": expected 'key = value'");
        auto trim = [](std::string s) {
            const auto x = s.find_first_not_of(" \t\r");
            if (x == std::string::npos) return std::string();
            const auto y = s.find_last_not_of(" \t\r");
            return s.substr(x, y - x + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "objective") c.train.objective = objective_from(val);
        else if (key == "lambda") c.train.lambda = parse_double(key, val);
        else if (key == "beta") c.train.beta = parse_double(key, val);
        else if (key == "ensemble_train") c.train.ensemble_train = static_cast<int>(parse_u64(key, val));
        else if (key == "ensemble_eval") c.train.ensemble_eval = static_cast<int>(parse_u64(key, val));
        else if (key == "optimizer") c.train.optimizer.method = optimizer_from(val);
        else if (key == "lr") c.train.optimizer.lr = parse_double(key, val);
        else if (key == "rmsprop_decay") c.train.optimizer.rmsprop_decay = parse_double(key, val);
        else if (key == "momentum") c.train.optimizer.momentum = parse_double(key, val);
        else if (key == "adam_beta1") c.train.optimizer.adam_beta1 = parse_double(key, val);
        else if (key == "adam_beta2") c.train.optimizer.adam_beta2 = parse_double(key, val);
        else if (key == "opt_epsilon") c.train.optimizer.epsilon = parse_double(key, val);
        else if (key == "batch_size") c.train.batch_size = parse_u64(key, val);
        else if (key == "epochs") c.train.epochs = parse_u64(key, val);
        else if (key == "seed") c.train.seed = parse_u64(key, val);
        else if (key == "kernel_gamma") c.train.kernel.gamma = parse_double(key, val);
        else if (key == "tau_r") c.train.temps.tau_r = parse_double(key, val);
        else if (key == "tau_c") c.train.temps.tau_c = parse_double(key, val);
        else if (key == "aece_mode") c.train.aece_mode = aece_mode_from(val);
        else if (key == "bins") c.train.bin_count = parse_u64(key, val);
        else if (key == "prior_mean") c.train.prior.mean = parse_double(key, val);
        else if (key == "prior_std") c.train.prior.std = parse_double(key, val);
        else if (key == "posterior_init_std") c.train.posterior_init_std = parse_double(key, val);
        else if (key == "hidden_dims") {
            c.hidden_dims.clear();
            for (const auto& s : split_list(val)) c.hidden_dims.push_back(parse_u64(key, s));
        } else if (key == "activation") c.activation = activation_from(val);
        else if (key == "data_source") c.data.source = source_from(val);
        else if (key == "synth_classes") c.data.synth_classes = parse_u64(key, val);
        else if (key == "synth_per_class") c.data.synth_per_class = parse_u64(key, val);
        else if (key == "synth_dim") c.data.synth_dim = parse_u64(key, val);
        else if (key == "synth_separation") c.data.synth_separation = parse_double(key, val);
        else if (key == "synth_noise") c.data.synth_noise = parse_double(key, val);
        else if (key == "csv_path") c.data.csv_path = val;
        else if (key == "csv_label_column") c.data.csv_label_column = val;
        else if (key == "csv_classes") c.data.csv_classes = parse_u64(key, val);
        else if (key == "data_seed") c.data.data_seed = parse_u64(key, val);
        else if (key == "test_fraction") c.data.test_fraction = parse_double(key, val);
        else if (key == "standardize") c.data.standardize = parse_bool(key, val);
        else if (key == "out_dir") c.out_dir = val;
        else if (key == "threads") c.threads = static_cast<int>(parse_u64(key, val));
        else if (key == "sweep_lambdas") {
            c.sweep_lambdas.clear();
            for (const auto& s : split_list(val)) c.sweep_lambdas.push_back(parse_double(key, s));
        } else if (key == "seeds") {
            c.seeds.clear();
            for (const auto& s : split_list(val)) c.seeds.push_back(parse_u64(key, s));
        } else {
            throw std::invalid_argument("config: line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace calibra::cli
