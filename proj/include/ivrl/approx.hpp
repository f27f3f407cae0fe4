#pragma once

// Dense feed-forward approximators with exact reverse-mode gradients, a
// central-difference gradient oracle, and first-order optimizers. Every
// learned component (Q head, policy, needs and value nets) is built on this.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivrl/rng.hpp"

namespace ivrl {

enum class Nonlinearity { rectifier, hyperbolic_tangent, identity };

inline const char* to_string(Nonlinearity n) {
  switch (n) {
    case Nonlinearity::rectifier: return "rectifier";
    case Nonlinearity::hyperbolic_tangent: return "tanh";
    case Nonlinearity::identity: return "identity";
  }
  return "?";
}

namespace detail {

inline std::size_t parameter_count(const std::vector<std::size_t>& sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += sizes[l + 1] * (sizes[l] + 1);
  return n;
}

// Flat layout: layer l stores its out x in weight block (row-major) followed
// by its out biases.
inline std::vector<std::size_t> layer_offsets(const std::vector<std::size_t>& sizes) {
  std::vector<std::size_t> offsets;
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    offsets.push_back(n);
    n += sizes[l + 1] * (sizes[l] + 1);
  }
  return offsets;
}

inline void validate_layer_sizes(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("layer_sizes needs at least input and output widths");
  for (auto s : sizes) {
    if (s == 0) throw std::invalid_argument("layer_sizes entries must be positive");
  }
}

inline double activate(Nonlinearity n, double z) {
  switch (n) {
    case Nonlinearity::rectifier: return z > 0.0 ? z : 0.0;
    case Nonlinearity::hyperbolic_tangent: return std::tanh(z);
    case Nonlinearity::identity: return z;
  }
  return z;
}

// Derivative expressed through pre-activation z and output a.
inline double activation_slope(Nonlinearity n, double z, double a) {
  switch (n) {
    case Nonlinearity::rectifier: return z > 0.0 ? 1.0 : 0.0;
    case Nonlinearity::hyperbolic_tangent: return 1.0 - a * a;
    case Nonlinearity::identity: return 1.0;
  }
  return 1.0;
}

}  // namespace detail

class Approximator;

// Gradient with respect to every parameter of an Approximator, stored in the
// same flat layout.
class ParamGradients {
 public:
  ParamGradients() = default;

  explicit ParamGradients(std::vector<std::size_t> layer_sizes)
      : layer_sizes_(std::move(layer_sizes)),
        offsets_(detail::layer_offsets(layer_sizes_)),
        values_(detail::parameter_count(layer_sizes_), 0.0) {}

  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  double& weight(std::size_t layer, std::size_t out, std::size_t in) {
    return values_[offsets_[layer] + out * layer_sizes_[layer] + in];
  }
  double weight(std::size_t layer, std::size_t out, std::size_t in) const {
    return values_[offsets_[layer] + out * layer_sizes_[layer] + in];
  }
  double& bias(std::size_t layer, std::size_t out) {
    return values_[offsets_[layer] + layer_sizes_[layer + 1] * layer_sizes_[layer] + out];
  }
  double bias(std::size_t layer, std::size_t out) const {
    return values_[offsets_[layer] + layer_sizes_[layer + 1] * layer_sizes_[layer] + out];
  }

  bool congruent(const std::vector<std::size_t>& sizes) const { return sizes == layer_sizes_; }

  ParamGradients& operator+=(const ParamGradients& other) {
    if (other.layer_sizes_ != layer_sizes_) throw std::invalid_argument("ParamGradients: shape mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }

  ParamGradients& operator*=(double s) {
    for (auto& v : values_) v *= s;
    return *this;
  }

  bool all_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
  }

  bool operator==(const ParamGradients&) const = default;

 private:
  std::vector<std::size_t> layer_sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

class Approximator {
 public:
  Approximator() = default;

  // Hidden layers use `hidden`; the output layer is always identity, so the
  // caller applies any squashing (softmax heads do this).
  static Approximator create(std::vector<std::size_t> layer_sizes, Nonlinearity hidden, std::uint64_t seed) {
    detail::validate_layer_sizes(layer_sizes);
    Approximator net;
    net.layer_sizes_ = std::move(layer_sizes);
    net.offsets_ = detail::layer_offsets(net.layer_sizes_);
    net.params_.assign(detail::parameter_count(net.layer_sizes_), 0.0);
    const std::size_t layers = net.layer_count();
    net.nonlinearity_.assign(layers, hidden);
    net.nonlinearity_.back() = Nonlinearity::identity;

    Rng rng(seed);
    for (std::size_t l = 0; l < layers; ++l) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(net.layer_sizes_[l]));
      for (std::size_t o = 0; o < net.layer_sizes_[l + 1]; ++o) {
        for (std::size_t i = 0; i < net.layer_sizes_[l]; ++i) {
          net.params_[net.weight_index(l, o, i)] = rng.uniform(-scale, scale);
        }
      }
    }
    return net;
  }

  std::size_t layer_count() const { return layer_sizes_.empty() ? 0 : layer_sizes_.size() - 1; }
  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  std::size_t input_size() const { return layer_sizes_.front(); }
  std::size_t output_size() const { return layer_sizes_.back(); }
  Nonlinearity nonlinearity(std::size_t layer) const { return nonlinearity_.at(layer); }
  void set_nonlinearity(std::size_t layer, Nonlinearity n) {
    nonlinearity_.at(layer) = n;
    cache_valid_ = false;
  }

  std::size_t parameter_count() const { return params_.size(); }
  std::span<const double> parameters() const { return params_; }
  // Mutable access drops the forward cache.
  std::span<double> mutable_parameters() {
    cache_valid_ = false;
    return params_;
  }

  double weight(std::size_t layer, std::size_t out, std::size_t in) const {
    return params_[weight_index(layer, out, in)];
  }
  double bias(std::size_t layer, std::size_t out) const { return params_[bias_index(layer, out)]; }
  void set_weight(std::size_t layer, std::size_t out, std::size_t in, double v) {
    params_.at(weight_index(layer, out, in)) = v;
    cache_valid_ = false;
  }
  void set_bias(std::size_t layer, std::size_t out, double v) {
    params_.at(bias_index(layer, out)) = v;
    cache_valid_ = false;
  }

  // Zeroes the final layer so every output starts at exactly 0.
  void zero_output_layer() {
    const std::size_t l = layer_count() - 1;
    const std::size_t begin = offsets_[l];
    std::fill(params_.begin() + static_cast<std::ptrdiff_t>(begin), params_.end(), 0.0);
    cache_valid_ = false;
  }

  std::span<const double> forward(std::span<const double> input) {
    if (input.size() != input_size()) {
      throw std::invalid_argument("forward: input length " + std::to_string(input.size()) + " != " +
                                  std::to_string(input_size()));
    }
    const std::size_t layers = layer_count();
    activations_.resize(layers + 1);
    preactivations_.resize(layers);
    activations_[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = layer_sizes_[l];
      const std::size_t out = layer_sizes_[l + 1];
      const auto& a = activations_[l];
      auto& z = preactivations_[l];
      auto& next = activations_[l + 1];
      z.assign(out, 0.0);
      next.assign(out, 0.0);
      const double* w = params_.data() + offsets_[l];
      const double* b = w + out * in;
      for (std::size_t o = 0; o < out; ++o) {
        double s = b[o];
        const double* row = w + o * in;
        for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
        z[o] = s;
        next[o] = detail::activate(nonlinearity_[l], s);
      }
    }
    cache_valid_ = true;
    return activations_.back();
  }

  std::vector<double> evaluate(std::span<const double> input) {
    auto out = forward(input);
    return {out.begin(), out.end()};
  }

  bool has_cache() const { return cache_valid_; }

  // Pre-activations of the last forward pass; the gradient checker uses them
  // to avoid sampling points on a rectifier kink.
  const std::vector<std::vector<double>>& cached_preactivations() const { return preactivations_; }

  // Gradient of dot(output, output_gradient) with respect to every parameter,
  // at the input of the most recent forward pass.
  ParamGradients backward(std::span<const double> output_gradient) const {
    ParamGradients grads(layer_sizes_);
    accumulate_backward(output_gradient, grads);
    return grads;
  }

  void accumulate_backward(std::span<const double> output_gradient, ParamGradients& into) const {
    if (!cache_valid_) throw std::logic_error("backward: no cached activations (call forward first)");
    if (output_gradient.size() != output_size()) throw std::invalid_argument("backward: output gradient length mismatch");
    if (!into.congruent(layer_sizes_)) throw std::invalid_argument("backward: gradient shape mismatch");

    const std::size_t layers = layer_count();
    std::vector<double> delta(output_gradient.begin(), output_gradient.end());
    std::vector<double> previous;
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = layer_sizes_[l];
      const std::size_t out = layer_sizes_[l + 1];
      const auto& z = preactivations_[l];
      const auto& a_out = activations_[l + 1];
      for (std::size_t o = 0; o < out; ++o) delta[o] *= detail::activation_slope(nonlinearity_[l], z[o], a_out[o]);

      const auto& a_in = activations_[l];
      for (std::size_t o = 0; o < out; ++o) {
        if (delta[o] == 0.0) continue;
        for (std::size_t i = 0; i < in; ++i) into.weight(l, o, i) += delta[o] * a_in[i];
        into.bias(l, o) += delta[o];
      }
      if (l == 0) break;
      previous.assign(in, 0.0);
      const double* w = params_.data() + offsets_[l];
      for (std::size_t o = 0; o < out; ++o) {
        if (delta[o] == 0.0) continue;
        const double* row = w + o * in;
        for (std::size_t i = 0; i < in; ++i) previous[i] += row[i] * delta[o];
      }
      delta.swap(previous);
    }
  }

  bool same_parameters(const Approximator& other) const {
    return layer_sizes_ == other.layer_sizes_ && nonlinearity_ == other.nonlinearity_ && params_ == other.params_;
  }

 private:
  std::size_t weight_index(std::size_t layer, std::size_t out, std::size_t in) const {
    return offsets_.at(layer) + out * layer_sizes_[layer] + in;
  }
  std::size_t bias_index(std::size_t layer, std::size_t out) const {
    return offsets_.at(layer) + layer_sizes_[layer + 1] * layer_sizes_[layer] + out;
  }

  std::vector<std::size_t> layer_sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  std::vector<Nonlinearity> nonlinearity_;
  std::vector<std::vector<double>> activations_;
  std::vector<std::vector<double>> preactivations_;
  bool cache_valid_ = false;
};

inline Approximator mlp_init(std::vector<std::size_t> layer_sizes, Nonlinearity hidden, std::uint64_t seed) {
  return Approximator::create(std::move(layer_sizes), hidden, seed);
}

enum class OptimizerMode { plain, adaptive };

struct OptimizerState {
  OptimizerMode mode = OptimizerMode::adaptive;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;

  static OptimizerState plain(double lr) {
    OptimizerState s;
    s.mode = OptimizerMode::plain;
    s.learning_rate = lr;
    return s;
  }
  static OptimizerState adaptive(double lr = 1e-3) {
    OptimizerState s;
    s.learning_rate = lr;
    return s;
  }
};

inline void apply_update(Approximator& net, const ParamGradients& grads, OptimizerState& opt) {
  if (!grads.congruent(net.layer_sizes())) throw std::invalid_argument("apply_update: gradient shape mismatch");
  if (!(opt.learning_rate >= 0.0)) throw std::invalid_argument("apply_update: negative learning rate");
  const auto g = grads.values();
  for (double v : g) {
    if (!std::isfinite(v)) throw std::domain_error("apply_update: non-finite gradient");
  }
  auto p = net.mutable_parameters();
  ++opt.step;
  if (opt.mode == OptimizerMode::plain) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= opt.learning_rate * g[i];
    return;
  }
  if (opt.first_moment.empty()) {
    opt.first_moment.assign(p.size(), 0.0);
    opt.second_moment.assign(p.size(), 0.0);
  }
  if (opt.first_moment.size() != p.size()) throw std::invalid_argument("apply_update: optimizer state shape mismatch");
  const double t = static_cast<double>(opt.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    opt.first_moment[i] = opt.beta1 * opt.first_moment[i] + (1.0 - opt.beta1) * g[i];
    opt.second_moment[i] = opt.beta2 * opt.second_moment[i] + (1.0 - opt.beta2) * g[i] * g[i];
    const double m_hat = opt.first_moment[i] / c1;
    const double v_hat = opt.second_moment[i] / c2;
    p[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
  }
}

inline std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  double top = -std::numeric_limits<double>::infinity();
  for (double z : logits) {
    if (!std::isfinite(z)) throw std::domain_error("softmax: non-finite logit");
    top = std::max(top, z);
  }
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

struct LossAndGradients {
  double loss = 0.0;
  ParamGradients grads;
};

using ScalarObjective = std::function<double(Approximator&)>;

// Central differences (f(p + h) - f(p - h)) / 2h for every scalar parameter.
// The network is restored exactly before returning.
inline ParamGradients finite_diff_gradient(const ScalarObjective& f, Approximator& net, double h = 1e-5) {
  if (!(h >= 1e-7 && h <= 1e-3)) throw std::invalid_argument("finite_diff_gradient: h outside [1e-7, 1e-3]");
  ParamGradients grads(net.layer_sizes());
  auto out = grads.values();
  for (std::size_t i = 0; i < net.parameter_count(); ++i) {
    const double saved = net.parameters()[i];
    net.mutable_parameters()[i] = saved + h;
    const double up = f(net);
    net.mutable_parameters()[i] = saved - h;
    const double down = f(net);
    net.mutable_parameters()[i] = saved;
    out[i] = (up - down) / (2.0 * h);
  }
  return grads;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). The floor keeps entries that
// are zero up to round-off from dominating.
inline double max_relative_error(const ParamGradients& a, const ParamGradients& b, double floor = 1e-6) {
  if (a.layer_sizes() != b.layer_sizes()) throw std::invalid_argument("max_relative_error: shape mismatch");
  double worst = 0.0;
  const auto x = a.values();
  const auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double denom = std::max({std::abs(x[i]), std::abs(y[i]), floor});
    worst = std::max(worst, std::abs(x[i] - y[i]) / denom);
  }
  return worst;
}

}  // namespace ivrl
