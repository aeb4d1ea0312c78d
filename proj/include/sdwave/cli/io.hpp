#pragma once

// Trajectory CSV and JSON report files. Files are written to a temporary
// sibling and renamed into place once complete.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdwave/analysis.hpp"
#include "sdwave/errors.hpp"

namespace sdwave::cli {

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"t",       "E",       "J",          "I",
                                             "kinetic", "grad_sq", "lgamma",     "logterm",
                                             "cross_term", "damping_integral", "identity_residual"};
  return cols;
}

/// Shortest round-trip-safe decimal text: 17 significant digits.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const auto& r : traj) {
    const double row[] = {r.t,       r.E,      r.J,          r.I,          r.kinetic,         r.grad_sq,
                          r.lgamma,  r.logterm, r.cross_term, r.damping_integral, r.identity_residual};
    for (std::size_t i = 0; i < std::size(row); ++i) {
      if (i) out += ',';
      out += format_real(row[i]);
    }
    out += '\n';
  }
  return out;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// Parses a trajectory CSV; the header must list exactly csv_columns().
/// grad_ut_sq is not stored and comes back as 0.
inline Trajectory parse_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("trajectory CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  if (header != csv_columns()) {
    for (const auto& c : csv_columns()) {
      bool found = false;
      for (const auto& h : header) found = found || h == c;
      if (!found) throw DataError("trajectory CSV lacks column '" + c + "'");
    }
    throw DataError("trajectory CSV columns are not in the expected order");
  }

  Trajectory traj;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      const double d = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') throw DataError("line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      v.push_back(d);
    }
    if (v.size() != header.size())
      throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " values");
    EnergyReport r;
    r.t = v[0];
    r.E = v[1];
    r.J = v[2];
    r.I = v[3];
    r.kinetic = v[4];
    r.grad_sq = v[5];
    r.lgamma = v[6];
    r.logterm = v[7];
    r.cross_term = v[8];
    r.damping_integral = v[9];
    r.identity_residual = v[10];
    traj.push_back(r);
  }
  return traj;
}

inline Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_trajectory_csv(ss.str());
}

}  // namespace sdwave::cli
