#pragma once

// File formats: trajectory CSV/JSONL, per-trial and summary tables. Numbers
// are printed with a fixed locale-independent format so that reruns produce
// identical bytes, and every file is written to a temporary name first and
// renamed into place.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tmpc/core.hpp"

namespace tmpc::io {

struct IoError : Error {
  using Error::Error;
};

/// Shortest round-tripping decimal form; "inf", "-inf" and "nan" for the
/// non-finite values.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string fmt(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%" PRIu64, v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw IoError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw IoError("not a number: '" + s + "'");
  return v;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// =============================================================================
// Trajectories
// =============================================================================

inline std::string trajectory_csv(const Trajectory& tr) {
  std::string s = "t,x,y\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    s += fmt(tr.time_at(k)) + "," + fmt(tr[k].x) + "," + fmt(tr[k].y) + "\n";
  }
  return s;
}

/// One {"t","x","y"} record per line; `agent`, when given, is added as a
/// fourth key so several agents can share a file.
inline std::string trajectory_jsonl(const Trajectory& tr, const std::string& agent = {}) {
  std::string s;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    s += "{\"t\":" + fmt(tr.time_at(k)) + ",\"x\":" + fmt(tr[k].x) + ",\"y\":" + fmt(tr[k].y);
    if (!agent.empty()) s += ",\"agent\":\"" + agent + "\"";
    s += "}\n";
  }
  return s;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline Trajectory parse_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split(line) != std::vector<std::string>{"t", "x", "y"}) {
    throw IoError("trajectory csv: expected header t,x,y");
  }
  std::vector<double> t;
  std::vector<Vec2> p;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 3) throw IoError("trajectory csv: expected 3 fields");
    t.push_back(parse_double(f[0]));
    p.emplace_back(parse_double(f[1]), parse_double(f[2]));
  }
  if (p.empty()) throw IoError("trajectory csv: no samples");
  const double dt = p.size() > 1 ? t[1] - t[0] : 1.0;
  return Trajectory(std::move(p), dt, t[0]);
}

// =============================================================================
// Tables
// =============================================================================

struct TrialRow {
  std::string trial_id;
  std::string policy;
  std::string scenario;
  double D = 0.0;
  double T = 0.0;
  bool collided = false;
  std::uint64_t seed = 0;
  std::string status = "reached";  // reached | collision | timeout | failed
};

struct SummaryRow {
  std::string policy;
  std::string scenario;
  std::string world;
  double mean_D = 0.0, std_D = 0.0;
  double mean_T = 0.0, std_T = 0.0;
  std::size_t n = 0;
};

inline std::string trial_id(const std::string& policy, const std::string& scenario, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return policy + "_" + scenario + "_" + buf;
}

inline const char* kTrialsHeader = "trial_id,policy,scenario,D,T,collided,seed,status";
inline const char* kSummaryHeader = "policy,scenario,world,mean_D,std_D,mean_T,std_T,n";

inline std::string trials_csv(const std::vector<TrialRow>& rows) {
  std::string s = std::string(kTrialsHeader) + "\n";
  for (const auto& r : rows) {
    s += r.trial_id + "," + r.policy + "," + r.scenario + "," + fmt(r.D) + "," + fmt(r.T) + "," + (r.collided ? "1" : "0") +
         "," + fmt(r.seed) + "," + r.status + "\n";
  }
  return s;
}

inline std::vector<TrialRow> parse_trials_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("trials csv: empty file");
  const auto header = split(line);
  // The trailing status column is optional on input.
  const auto expect = split(kTrialsHeader);
  if (header.size() < 7 || !std::equal(header.begin(), header.begin() + 7, expect.begin())) {
    throw IoError("trials csv: unexpected header '" + line + "'");
  }
  std::vector<TrialRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw IoError("trials csv: wrong field count in '" + line + "'");
    TrialRow r;
    r.trial_id = f[0];
    r.policy = f[1];
    r.scenario = f[2];
    r.D = parse_double(f[3]);
    r.T = parse_double(f[4]);
    r.collided = f[5] == "1";
    r.seed = std::stoull(f[6]);
    if (f.size() > 7) r.status = f[7];
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string s = std::string(kSummaryHeader) + "\n";
  for (const auto& r : rows) {
    s += r.policy + "," + r.scenario + "," + r.world + "," + fmt(r.mean_D) + "," + fmt(r.std_D) + "," + fmt(r.mean_T) +
         "," + fmt(r.std_T) + "," + fmt(static_cast<std::uint64_t>(r.n)) + "\n";
  }
  return s;
}

}  // namespace tmpc::io
