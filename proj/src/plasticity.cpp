#include "filt_snn/plasticity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace filt_snn {

void TrainConfig::validate() const {
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("train config: eta must be finite and >= 0");
  }
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("train config: require 0 <= beta < 1");
  if (!(eps_rms > 0.0)) throw std::invalid_argument("train config: require eps_rms > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("train config: require gamma >= 0");
  if (!std::isfinite(delta_t) || !std::isfinite(d_t)) {
    throw std::invalid_argument("train config: delta_t and d_t must be finite");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("train config: require 0 <= dropout_rate < 1");
  }
  if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (eval_every == 0) throw std::invalid_argument("train config: eval_every must be >= 1");
  window.validate();
}

double lambda_window(double s, const KernelParams& p) {
  const double c_m = p.tau_m / (p.tau_m + p.tau_q);
  const double c_s = p.tau_s / (p.tau_s + p.tau_q);
  if (s > 0.0) {
    return p.eps0 * (c_m * std::exp(-s / p.tau_m) - c_s * std::exp(-s / p.tau_s));
  }
  return p.eps0 * (c_m - c_s) * std::exp(s / p.tau_q);
}

double filt_delta_w(std::optional<double> target, std::optional<double> actual,
                    const SpikeTrain& presyn, const KernelParams& p) {
  if (target && actual && *target == *actual) {
    return 0.0;
  }
  double reinforce = 0.0;
  double weaken = 0.0;
  for (double tj : presyn.times()) {
    if (target) reinforce += lambda_window(*target - tj, p);
    if (actual) weaken += lambda_window(*actual - tj, p);
  }
  return reinforce - weaken;
}

std::vector<double> output_desirability(std::size_t label, std::size_t n_classes) {
  if (label >= n_classes) {
    throw std::invalid_argument("output_desirability: label " + std::to_string(label) +
                                " out of range for " + std::to_string(n_classes) + " classes");
  }
  std::vector<double> d(n_classes, -1.0);
  d[label] = 1.0;
  return d;
}

std::vector<double> normalize_desirability(std::span<const double> raw) {
  if (raw.empty()) {
    return {};
  }
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> d(raw.size(), 1.0);
  if (!(hi > lo)) {
    return d;
  }
  const double span = hi - lo;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    d[i] = 1.0 + 2.0 * (raw[i] - hi) / span;
  }
  return d;
}

std::vector<double> backpropagate_desirability(const Matrix& w_next, std::span<const double> d_next) {
  if (w_next.rows() != d_next.size()) {
    throw std::invalid_argument("backpropagate_desirability: dimension mismatch");
  }
  std::vector<double> raw(w_next.cols(), 0.0);
  for (std::size_t r = 0; r < w_next.rows(); ++r) {
    const auto row = w_next.row(r);
    for (std::size_t c = 0; c < raw.size(); ++c) {
      raw[c] += row[c] * d_next[r];
    }
  }
  return normalize_desirability(raw);
}

std::vector<std::optional<double>> assign_targets(std::span<const double> desirability,
                                                  std::span<const std::optional<double>> first_spikes,
                                                  std::size_t layer_index, const TrainConfig& cfg) {
  if (desirability.size() != first_spikes.size()) {
    throw std::invalid_argument("assign_targets: length mismatch");
  }
  if (layer_index == 0) {
    throw std::invalid_argument("assign_targets: the input layer has no targets");
  }
  const double substitute = 5.0 * static_cast<double>(layer_index);
  std::vector<std::optional<double>> targets(desirability.size());
  for (std::size_t j = 0; j < desirability.size(); ++j) {
    if (desirability[j] >= cfg.d_t) {
      targets[j] = first_spikes[j].value_or(substitute) - cfg.delta_t;
    }
  }
  return targets;
}

OptimizerState OptimizerState::init(const Network& net) {
  OptimizerState s;
  for (const auto& w : net.weights) {
    s.mean_square.emplace_back(w.rows(), w.cols(), 1.0);
    s.prev_scaled.push_back(w);
  }
  return s;
}

void rmsprop_step(Network& net, std::span<const Matrix> accumulated, OptimizerState& state,
                  const TrainConfig& cfg) {
  if (accumulated.size() != net.weights.size() || state.mean_square.size() != net.weights.size()) {
    throw std::invalid_argument("rmsprop_step: layer count mismatch");
  }
  for (std::size_t k = 0; k < net.weights.size(); ++k) {
    auto w = net.weights[k].data();
    auto r = state.mean_square[k].data();
    const auto dw = accumulated[k].data();
    if (dw.size() != w.size() || r.size() != w.size()) {
      throw std::invalid_argument("rmsprop_step: shape mismatch in layer " + std::to_string(k));
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      r[i] = cfg.beta * r[i] + (1.0 - cfg.beta) * dw[i] * dw[i];
      w[i] += cfg.eta * dw[i] / std::sqrt(cfg.eps_rms + r[i]);
    }
  }
}

Matrix synaptic_scaling(const Matrix& weights, const Matrix& prev_scaled,
                        std::span<const double> mean_spike_counts, double gamma) {
  if (!weights.same_shape(prev_scaled) || mean_spike_counts.size() != weights.rows()) {
    throw std::invalid_argument("synaptic_scaling: shape mismatch");
  }
  Matrix out = weights;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    const double deficit = 1.0 - mean_spike_counts[i];
    auto row = out.row(i);
    const auto prev = prev_scaled.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] += gamma * std::abs(prev[j]) * deficit;
    }
  }
  return out;
}

void apply_synaptic_scaling(Network& net, std::span<const std::vector<double>> mean_spike_counts,
                            OptimizerState& state, const TrainConfig& cfg) {
  const std::size_t hidden_layers = net.weights.size() - 1;
  if (mean_spike_counts.size() != hidden_layers) {
    throw std::invalid_argument("apply_synaptic_scaling: need spike counts for every hidden layer");
  }
  for (std::size_t k = 0; k < hidden_layers; ++k) {
    net.weights[k] =
        synaptic_scaling(net.weights[k], state.prev_scaled[k], mean_spike_counts[k], cfg.gamma);
  }
  for (std::size_t k = 0; k < net.weights.size(); ++k) {
    state.prev_scaled[k] = net.weights[k];
  }
}

LayerMask dropout_mask(std::size_t n, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout_mask: require 0 <= rate < 1");
  }
  LayerMask keep(n, true);
  if (rate == 0.0) {
    return keep;
  }
  for (std::size_t i = 0; i < n; ++i) {
    keep[i] = !rng.bernoulli(rate);
  }
  return keep;
}

}  // namespace filt_snn
