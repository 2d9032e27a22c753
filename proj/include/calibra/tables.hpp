#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "calibra/calibration.hpp"
#include "calibra/training.hpp"

namespace calibra::io {

inline std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Absent values (empty calibration bins) are written as NA.
inline std::string fmt_or_na(double v) { return std::isnan(v) ? "NA" : fmt_g(v); }

/// Write the whole file or nothing: write to a temp sibling, then rename.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("atomic_write: cannot open " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("atomic_write: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_file: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---- tables -----------------------------------------------------------

inline std::string train_log_csv(const training::TrainLog& log) {
    std::string out = "epoch,train_loss,test_acc,test_ece,kl,aece,seconds\n";
    for (const auto& r : log.epochs) {
        out += std::to_string(r.epoch) + "," + fmt_g(r.train_loss) + "," + fmt_g(r.test_acc) + "," +
               fmt_g(r.test_ece) + "," + fmt_g(r.kl) + "," + fmt_g(r.aece) + "," + fmt_g(r.seconds) + "\n";
    }
    return out;
}

inline std::string reliability_csv(const cal::CalibrationReport& rep) {
    std::string out = "bin_index,left_edge,right_edge,count,accuracy,confidence\n";
    for (const auto& row : cal::reliability_diagram(rep)) {
        out += std::to_string(row.bin_index) + "," + fmt_g(row.left_edge) + "," + fmt_g(row.right_edge) + "," +
               std::to_string(row.count) + "," + fmt_or_na(row.accuracy) + "," + fmt_or_na(row.confidence) + "\n";
    }
    return out;
}

inline std::string calibration_summary_csv(const cal::CalibrationReport& rep, double accuracy) {
    std::string out = "metric,value\n";
    out += "ece," + fmt_g(rep.ece) + "\n";
    out += "accuracy," + fmt_g(accuracy) + "\n";
    out += "n," + std::to_string(rep.n) + "\n";
    out += "bins," + std::to_string(rep.bin_count) + "\n";
    return out;
}

struct SweepRow {
    std::string objective;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    double accuracy = 0.0;
    double ece = 0.0;
    std::string error;
};

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "objective,lambda,seed,accuracy,ece\n";
    for (const auto& r : rows) {
        out += r.objective + "," + fmt_g(r.lambda) + "," + std::to_string(r.seed) + ",";
        out += r.ok ? fmt_g(r.accuracy) : "NA";
        out += ",";
        out += r.ok ? fmt_g(r.ece) : "NA";
        out += "\n";
    }
    return out;
}

}  // namespace calibra::io
