#include "filt_snn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "filt_snn/plasticity.hpp"
#include "filt_snn/rng.hpp"

namespace filt_snn {

namespace {

constexpr double kScanStep = 0.01;
constexpr double kRootTolerance = 1e-9;

std::vector<WeightedInput> weighted(std::span<const double> weights, std::span<const double> times) {
  std::vector<WeightedInput> inputs;
  inputs.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    inputs.push_back({weights[k], SpikeTrain::single(times[k])});
  }
  return inputs;
}

std::optional<double> first_spike_for(std::span<const double> weights, std::span<const double> times,
                                      const KernelParams& p, const SimWindow& window) {
  const auto inputs = weighted(weights, times);
  return simulate_neuron(inputs, p, window).first();
}

void self_targeted_update(std::vector<double>& weights, std::span<const double> times, double t,
                          double delta_t, double eta, const KernelParams& p) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    weights[k] += eta * filt_delta_w(t - delta_t, t, SpikeTrain::single(times[k]), p);
  }
}

}  // namespace

void EquilibriumProblem::validate() const {
  params.validate();
  window.validate();
  if (!std::isfinite(delta_t) || delta_t < 0.0) {
    throw std::invalid_argument("equilibrium problem: delta_t must be finite and >= 0");
  }
  for (std::size_t k = 0; k < input_times.size(); ++k) {
    const double t = input_times[k];
    if (!std::isfinite(t) || t < 0.0) {
      throw std::invalid_argument("equilibrium problem: input times must be finite and >= 0");
    }
    if (k > 0 && t < input_times[k - 1]) {
      throw std::invalid_argument("equilibrium problem: input times must be sorted");
    }
  }
}

std::vector<double> delta_u_terms(double t_i, const EquilibriumProblem& prob) {
  const KernelParams& p = prob.params;
  std::vector<double> terms;
  terms.reserve(prob.input_times.size());
  for (double tk : prob.input_times) {
    const double eps = psp_kernel(t_i - tk, p);
    if (eps == 0.0) {
      terms.push_back(0.0);
      continue;
    }
    terms.push_back((lambda_window(t_i - prob.delta_t - tk, p) - lambda_window(t_i - tk, p)) * eps);
  }
  return terms;
}

double delta_u(double t_i, const EquilibriumProblem& prob) {
  double total = 0.0;
  for (double term : delta_u_terms(t_i, prob)) total += term;
  return total;
}

std::optional<Equilibrium> find_t_E(const EquilibriumProblem& prob) {
  prob.validate();
  if (prob.input_times.empty() || prob.delta_t == 0.0) {
    return std::nullopt;
  }
  const double lo = prob.input_times.front();
  const double hi = prob.window.duration;
  std::optional<Equilibrium> best;
  std::size_t roots = 0;
  double a = lo;
  double fa = delta_u(a, prob);
  for (std::size_t k = 1; a < hi; ++k) {
    const double b = std::min(lo + static_cast<double>(k) * kScanStep, hi);
    const double fb = delta_u(b, prob);
    if (fa < 0.0 && fb >= 0.0) {
      double left = a;
      double right = b;
      while (right - left > kRootTolerance) {
        const double mid = 0.5 * (left + right);
        if (delta_u(mid, prob) < 0.0) {
          left = mid;
        } else {
          right = mid;
        }
      }
      ++roots;
      best = Equilibrium{0.5 * (left + right), 0};
    }
    a = b;
    fa = fb;
  }
  if (best) best->attractor_roots = roots;
  return best;
}

ConvergenceResult convergence_run(const EquilibriumProblem& prob, std::vector<double> initial_weights,
                                  std::size_t iterations, double eta) {
  prob.validate();
  if (initial_weights.size() != prob.input_times.size()) {
    throw std::invalid_argument("convergence_run: need one weight per input");
  }
  ConvergenceResult result;
  result.final_weights = std::move(initial_weights);
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto t = first_spike_for(result.final_weights, prob.input_times, prob.params, prob.window);
    if (!t) {
      if (it == 0) throw std::invalid_argument("convergence_run: initial weights produce no spike");
      result.diverged = true;
      break;
    }
    result.spike_times.push_back(*t);
    self_targeted_update(result.final_weights, prob.input_times, *t, prob.delta_t, eta, prob.params);
  }
  return result;
}

double equal_weight_for_spike(const EquilibriumProblem& prob, double target) {
  prob.validate();
  if (prob.input_times.empty()) {
    throw std::invalid_argument("equal_weight_for_spike: no inputs");
  }
  const std::size_t n = prob.input_times.size();
  auto reaches = [&](double w) {
    const std::vector<double> weights(n, w);
    const auto t = first_spike_for(weights, prob.input_times, prob.params, prob.window);
    return t && *t <= target;
  };
  double hi = 1.0;
  while (!reaches(hi)) {
    hi *= 2.0;
    if (hi > 1e6) throw std::invalid_argument("equal_weight_for_spike: target not reachable");
  }
  double lo = 0.0;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (reaches(mid) ? hi : lo) = mid;
  }
  return hi;
}

void TwoTrainSetup::validate() const {
  params.validate();
  window.validate();
  if (train_a.size() != train_b.size() || train_a.size() != initial_weights.size()) {
    throw std::invalid_argument("two_train_run: trains and weights need the same channel count");
  }
  for (const ChannelTimes* train : {&train_a, &train_b}) {
    for (const auto& t : *train) {
      if (t && (!std::isfinite(*t) || *t < 0.0)) {
        throw std::invalid_argument("two_train_run: spike times must be finite and >= 0");
      }
    }
  }
  if (!std::isfinite(delta_t) || delta_t < 0.0) {
    throw std::invalid_argument("two_train_run: delta_t must be finite and >= 0");
  }
}

TwoTrainResult two_train_run(const TwoTrainSetup& setup) {
  setup.validate();
  TwoTrainResult result;
  result.final_weights = setup.initial_weights;

  auto equilibrium_of = [&](const ChannelTimes& train) {
    EquilibriumProblem prob{{}, setup.delta_t, setup.params, setup.window};
    for (const auto& t : train) {
      if (t) prob.input_times.push_back(*t);
    }
    std::sort(prob.input_times.begin(), prob.input_times.end());
    return find_t_E(prob);
  };
  result.t_e_a = equilibrium_of(setup.train_a);
  result.t_e_b = equilibrium_of(setup.train_b);

  Rng rng(derive_seed(setup.seed, 0x2772));
  std::vector<WeightedInput> inputs;
  for (std::size_t it = 0; it < setup.iterations; ++it) {
    const std::size_t which = static_cast<std::size_t>(rng.below(2));
    const ChannelTimes& train = which == 0 ? setup.train_a : setup.train_b;
    inputs.clear();
    for (std::size_t c = 0; c < train.size(); ++c) {
      if (train[c]) inputs.push_back({result.final_weights[c], SpikeTrain::single(*train[c])});
    }
    const auto t = simulate_neuron(inputs, setup.params, setup.window).first();
    if (!t) {
      result.diverged = true;
      break;
    }
    result.steps.push_back({which, *t});
    for (std::size_t c = 0; c < train.size(); ++c) {
      if (!train[c]) continue;
      result.final_weights[c] +=
          setup.eta * filt_delta_w(*t - setup.delta_t, *t, SpikeTrain::single(*train[c]), setup.params);
    }
  }
  return result;
}

TwoTrainSetup default_two_train_setup() {
  TwoTrainSetup setup;
  setup.train_a = {0.0, 2.0};
  setup.train_b = {1.0, 0.0};
  setup.initial_weights = {10.0, 10.0};
  return setup;
}

void write_series_csv(std::ostream& out, const std::vector<SeriesPoint>& points) {
  out << "x,series,value\n";
  char buf[64];
  for (const auto& pt : points) {
    std::snprintf(buf, sizeof buf, "%.17g", pt.x);
    out << buf << ',' << pt.series << ',';
    std::snprintf(buf, sizeof buf, "%.17g", pt.value);
    out << buf << '\n';
  }
}

}  // namespace filt_snn
