#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rewa/errors.hpp"
#include "rewa/optimizers.hpp"

#include <json.hpp>

namespace rewa::records {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

// shortest %g form that still round-trips, for human-facing labels
inline std::string format_label(double v) {
  for (int prec = 1; prec <= 17; ++prec) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) {
      return std::string(buf);
    }
  }
  return format_double(v);
}

// FNV-1a 64-bit, used for run ids and file checksums
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

/// CSV body of a run: one row per logged step, fixed column order
/// step,train_loss,test_loss,residual,weighted_grad,below_<tau>...
/// Deterministic given the record; wall-clock lives in the JSON sidecar.
inline std::string run_record_csv(const opt::RunRecord& rec) {
  std::ostringstream out;
  out << "step,train_loss,test_loss,residual,weighted_grad";
  for (double tau : rec.thresholds) {
    out << ",below_" << format_label(tau);
  }
  out << '\n';
  for (const auto& row : rec.rows) {
    out << row.step << ',' << format_double(row.train_loss) << ','
        << format_double(row.test_loss) << ',' << format_double(row.residual)
        << ',' << format_double(row.weighted_grad);
    for (std::size_t c : row.sparsity_counts) {
      out << ',' << c;
    }
    out << '\n';
  }
  return out.str();
}

/// JSON sidecar: config snapshot, seed, final iterate, per-row wall-clock.
inline nlohmann::json run_record_sidecar(const opt::RunRecord& rec,
                                         const nlohmann::json& config,
                                         const std::string& run_id,
                                         std::int64_t created_unix) {
  nlohmann::json j;
  j["run_id"] = run_id;
  j["config"] = config;
  j["seed"] = rec.seed;
  j["rows"] = rec.rows.size();
  j["final_x"] = rec.final_x;
  std::vector<double> elapsed;
  elapsed.reserve(rec.rows.size());
  for (const auto& row : rec.rows) {
    elapsed.push_back(row.elapsed_sec);
  }
  j["elapsed_sec"] = elapsed;
  j["created_unix"] = created_unix;
  return j;
}

inline void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw IoError("write_file: cannot open " + path);
  }
  f << body;
  if (!f) {
    throw IoError("write_file: write failed for " + path);
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw IoError("read_file: cannot open " + path);
  }
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace rewa::records
