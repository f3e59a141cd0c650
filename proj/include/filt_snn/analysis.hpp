#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "filt_snn/neuron.hpp"

namespace filt_snn {

/// Single neuron driven by one spike per input channel.
struct EquilibriumProblem {
  std::vector<double> input_times;
  double delta_t = 0.5;
  KernelParams params{};
  SimWindow window{};

  /// Throws std::invalid_argument unless times are sorted, finite, >= 0 and delta_t >= 0.
  void validate() const;
};

/// Per-input contributions to the potential change at t_i after one shifted-target
/// update: [lambda(t_i - dt - t_k) - lambda(t_i - t_k)] * eps(t_i - t_k).
/// Independent of the synaptic weights; the reset kernel is not included.
std::vector<double> delta_u_terms(double t_i, const EquilibriumProblem& prob);
double delta_u(double t_i, const EquilibriumProblem& prob);

struct Equilibrium {
  double t_e = 0.0;
  /// Attractor roots found in the window; > 1 means t_e is the latest of several.
  std::size_t attractor_roots = 0;
};

/// Latest root of delta_u in (min input, T] where delta_u crosses from - to +.
/// Scans at 0.01 ms, then bisects to 1e-6 ms.
std::optional<Equilibrium> find_t_E(const EquilibriumProblem& prob);

struct ConvergenceResult {
  /// First spike per iteration, starting with the untrained weights.
  std::vector<double> spike_times;
  std::vector<double> final_weights;
  /// True when the neuron fell silent before the requested iteration count.
  bool diverged = false;
};

/// Default learning rate of the single-neuron experiments.
inline constexpr double kAnalysisEta = 5.0;

/// Repeated simulate / self-targeted update (target = first spike - delta_t),
/// plain gradient step with rate eta. Throws std::invalid_argument if the
/// initial weights do not produce a spike.
ConvergenceResult convergence_run(const EquilibriumProblem& prob, std::vector<double> initial_weights,
                                  std::size_t iterations, double eta = kAnalysisEta);

/// Smallest equal weight (to 1e-9) whose first spike is at or before `target`.
/// Throws std::invalid_argument when no weight up to 1e6 achieves it.
double equal_weight_for_spike(const EquilibriumProblem& prob, double target);

/// Per-channel spike time; nullopt means the channel is silent for this train.
using ChannelTimes = std::vector<std::optional<double>>;

struct TwoTrainSetup {
  ChannelTimes train_a;
  ChannelTimes train_b;
  std::vector<double> initial_weights;
  double delta_t = 0.5;
  double eta = kAnalysisEta;
  std::size_t iterations = 300;
  std::uint64_t seed = 1;
  KernelParams params{};
  SimWindow window{};

  void validate() const;
};

struct TwoTrainStep {
  std::size_t train = 0;  // 0 = a, 1 = b
  double spike_time = 0.0;
};

struct TwoTrainResult {
  std::vector<TwoTrainStep> steps;
  std::optional<Equilibrium> t_e_a;
  std::optional<Equilibrium> t_e_b;
  std::vector<double> final_weights;
  bool diverged = false;
};

/// Each iteration presents train a or b with equal probability and applies the
/// self-targeted update for that presentation.
TwoTrainResult two_train_run(const TwoTrainSetup& setup);

/// Default alternation scenario: a = {0, 2} ms, b = {1, 0} ms, weights 10.
TwoTrainSetup default_two_train_setup();

/// One row of a long-format figure table.
struct SeriesPoint {
  double x = 0.0;
  std::string series;
  double value = 0.0;
};

/// Writes "x,series,value" with values at full double precision.
void write_series_csv(std::ostream& out, const std::vector<SeriesPoint>& points);

}  // namespace filt_snn
