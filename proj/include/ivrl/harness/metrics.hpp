#pragma once

// Per-episode metrics and their CSV form. The column set is a versioned
// constant; wall-clock time lives in a separate file so that the metrics
// bytes stay a pure function of the configuration.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivrl/innate_values.hpp"

namespace ivrl::harness {

inline constexpr int kMetricsSchemaVersion = 1;
inline constexpr std::size_t kMetricsChannelColumns = 4;
inline constexpr double kWeightSumTolerance = 1e-6;

inline const char* metrics_header() {
  return "run_id,seed,episode,steps,reward,u0,u1,u2,u3,w0,w1,w2,w3,"
         "loss_q,loss_policy,loss_needs,loss_value,survival_ticks,kills,task_score";
}

inline const char* timing_header() { return "run_id,seed,episode,wall_ms"; }

struct MetricsRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::size_t episode = 0;
  std::size_t steps = 0;  // environment steps taken by this run so far
  double reward = 0.0;
  std::vector<double> utilities;  // K entries
  std::vector<double> weights;    // K entries on the simplex
  double loss_q = 0.0;
  double loss_policy = 0.0;
  double loss_needs = 0.0;
  double loss_value = 0.0;
  std::size_t survival_ticks = 0;
  std::size_t kills = 0;
  double task_score = 0.0;
  double wall_ms = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

using MetricsTable = std::vector<MetricsRow>;

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void check_row(const MetricsRow& row) {
  const std::size_t k = row.weights.size();
  if (k == 0 || k > kMetricsChannelColumns || row.utilities.size() != k) {
    throw MetricsError("metrics row has " + std::to_string(row.utilities.size()) + " utilities and " +
                       std::to_string(k) + " weights");
  }
  double total = 0.0;
  for (double w : row.weights) total += w;
  if (!(std::abs(total - 1.0) <= kWeightSumTolerance)) {
    throw MetricsError("weights of " + row.run_id + " seed " + std::to_string(row.seed) + " episode " +
                       std::to_string(row.episode) + " sum to " + std::to_string(total));
  }
}

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

// Columns past K are left empty.
inline std::string to_csv(const MetricsTable& table) {
  std::string out = metrics_header();
  out += '\n';
  for (const auto& row : table) {
    check_row(row);
    out += row.run_id + ',' + std::to_string(row.seed) + ',' + std::to_string(row.episode) + ',' +
           std::to_string(row.steps) + ',' + format_number(row.reward);
    for (const auto* channel : {&row.utilities, &row.weights}) {
      for (std::size_t k = 0; k < kMetricsChannelColumns; ++k) {
        out += ',';
        if (k < channel->size()) out += format_number((*channel)[k]);
      }
    }
    for (double x : {row.loss_q, row.loss_policy, row.loss_needs, row.loss_value}) out += ',' + format_number(x);
    out += ',' + std::to_string(row.survival_ticks) + ',' + std::to_string(row.kills) + ',' +
           format_number(row.task_score) + '\n';
  }
  return out;
}

inline std::string timing_csv(const MetricsTable& table) {
  std::string out = timing_header();
  out += '\n';
  for (const auto& row : table) {
    out += row.run_id + ',' + std::to_string(row.seed) + ',' + std::to_string(row.episode) + ',' +
           format_number(row.wall_ms) + '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double csv_real(const std::string& s, std::size_t line) {
  std::size_t used = 0;
  try {
    const double x = std::stod(s, &used);
    if (used == s.size()) return x;
  } catch (const std::exception&) {
  }
  throw MetricsError("metrics line " + std::to_string(line) + ": bad number '" + s + "'");
}

inline std::uint64_t csv_unsigned(const std::string& s, std::size_t line) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw MetricsError("metrics line " + std::to_string(line) + ": bad integer '" + s + "'");
  }
  return std::stoull(s);
}

}  // namespace detail

inline MetricsTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != metrics_header()) throw MetricsError("metrics header does not match");
  constexpr std::size_t kColumns = 20;
  MetricsTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = detail::split_fields(line);
    if (f.size() != kColumns) {
      throw MetricsError("metrics line " + std::to_string(line_no) + ": expected 20 fields, got " +
                         std::to_string(f.size()));
    }
    MetricsRow row;
    row.run_id = f[0];
    row.seed = detail::csv_unsigned(f[1], line_no);
    row.episode = detail::csv_unsigned(f[2], line_no);
    row.steps = detail::csv_unsigned(f[3], line_no);
    row.reward = detail::csv_real(f[4], line_no);
    for (std::size_t k = 0; k < kMetricsChannelColumns; ++k) {
      if (!f[5 + k].empty()) row.utilities.push_back(detail::csv_real(f[5 + k], line_no));
      if (!f[9 + k].empty()) row.weights.push_back(detail::csv_real(f[9 + k], line_no));
    }
    row.loss_q = detail::csv_real(f[13], line_no);
    row.loss_policy = detail::csv_real(f[14], line_no);
    row.loss_needs = detail::csv_real(f[15], line_no);
    row.loss_value = detail::csv_real(f[16], line_no);
    row.survival_ticks = detail::csv_unsigned(f[17], line_no);
    row.kills = detail::csv_unsigned(f[18], line_no);
    row.task_score = detail::csv_real(f[19], line_no);
    check_row(row);
    table.push_back(std::move(row));
  }
  return table;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << bytes;
  if (!out.flush()) throw std::runtime_error("write failed for " + path);
}

}  // namespace ivrl::harness
