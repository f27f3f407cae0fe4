#pragma once

// Plot data: per run id, <run>_reward.dat holds "episode reward" and
// <run>_weights.dat holds "episode w0 .. wK-1", both smoothed with a trailing
// mean over the last 10 episodes (fewer at the start). Seeds of one run are
// averaged per episode before smoothing.

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivrl/harness/metrics.hpp"

namespace ivrl::harness {

inline constexpr std::size_t kCurveWindow = 10;

inline std::vector<double> trailing_mean(const std::vector<double>& xs, std::size_t window = kCurveWindow) {
  if (window == 0) throw std::invalid_argument("trailing_mean: window must be positive");
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t first = i + 1 >= window ? i + 1 - window : 0;
    double total = 0.0;
    for (std::size_t j = first; j <= i; ++j) total += xs[j];
    out[i] = total / static_cast<double>(i - first + 1);
  }
  return out;
}

struct CurveData {
  std::vector<std::size_t> episodes;
  std::vector<double> reward;
  std::vector<std::vector<double>> weights;  // [episode][k]
};

// Seed-averaged, smoothed curves for each run id.
inline std::map<std::string, CurveData> curve_data(const MetricsTable& table) {
  if (table.empty()) throw std::invalid_argument("curves: empty metrics table");
  struct Acc {
    double reward = 0.0;
    std::vector<double> weights;
    std::size_t count = 0;
  };
  std::map<std::string, std::map<std::size_t, Acc>> grouped;
  for (const auto& row : table) {
    check_row(row);
    Acc& a = grouped[row.run_id][row.episode];
    if (a.count == 0) a.weights.assign(row.weights.size(), 0.0);
    if (a.weights.size() != row.weights.size()) throw MetricsError("curves: channel count changes within a run");
    a.reward += row.reward;
    for (std::size_t k = 0; k < row.weights.size(); ++k) a.weights[k] += row.weights[k];
    ++a.count;
  }
  std::map<std::string, CurveData> out;
  for (const auto& [run, episodes] : grouped) {
    CurveData d;
    std::vector<std::vector<double>> channels(episodes.begin()->second.weights.size());
    for (const auto& [episode, a] : episodes) {
      d.episodes.push_back(episode);
      d.reward.push_back(a.reward / static_cast<double>(a.count));
      for (std::size_t k = 0; k < channels.size(); ++k) channels[k].push_back(a.weights[k] / static_cast<double>(a.count));
    }
    d.reward = trailing_mean(d.reward);
    for (auto& ch : channels) ch = trailing_mean(ch);
    d.weights.assign(d.episodes.size(), std::vector<double>(channels.size()));
    for (std::size_t i = 0; i < d.episodes.size(); ++i) {
      for (std::size_t k = 0; k < channels.size(); ++k) d.weights[i][k] = channels[k][i];
    }
    out.emplace(run, std::move(d));
  }
  return out;
}

// Returns the files written.
inline std::vector<std::filesystem::path> emit_curves(const MetricsTable& table, const std::filesystem::path& dir) {
  const auto curves = curve_data(table);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& [run, d] : curves) {
    std::string reward = "# episode reward\n";
    std::string weights = "# episode";
    for (std::size_t k = 0; k < d.weights.front().size(); ++k) weights += " w" + std::to_string(k);
    weights += '\n';
    for (std::size_t i = 0; i < d.episodes.size(); ++i) {
      reward += std::to_string(d.episodes[i]) + ' ' + format_number(d.reward[i]) + '\n';
      weights += std::to_string(d.episodes[i]);
      for (double w : d.weights[i]) weights += ' ' + format_number(w);
      weights += '\n';
    }
    const auto reward_path = dir / (run + "_reward.dat");
    const auto weights_path = dir / (run + "_weights.dat");
    write_file(reward_path.string(), reward);
    write_file(weights_path.string(), weights);
    written.push_back(reward_path);
    written.push_back(weights_path);
  }
  return written;
}

}  // namespace ivrl::harness
