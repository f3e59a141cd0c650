#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "filt_snn/matrix.hpp"
#include "filt_snn/network.hpp"
#include "filt_snn/neuron.hpp"
#include "filt_snn/rng.hpp"

namespace filt_snn {

/// Learning hyper-parameters and run shape.
struct TrainConfig {
  double eta = 0.01;
  double beta = 0.9;
  double eps_rms = 0.003;
  double gamma = 0.01;
  double delta_t = 0.5;       // target shift (ms)
  double d_t = 0.0;           // desirability threshold
  double dropout_rate = 0.35;
  std::size_t batch_size = 20;
  std::size_t batches = 500;
  std::uint64_t seed = 1;
  SimWindow window{};
  std::size_t eval_every = 25;
  /// Sum per-sample updates over a batch (true) or average them.
  bool sum_batch_updates = true;
  /// Worker threads for sample-level parallelism; 0 picks hardware concurrency.
  std::size_t threads = 0;

  void validate() const;
};

/// Coincidence window of the learning rule; continuous at s = 0.
double lambda_window(double s, const KernelParams& p);

/// Unit-rate weight change for one synapse:
///   sum_j lambda(target - t_j) - sum_j lambda(actual - t_j).
/// A missing target or missing actual spike contributes nothing to its term.
double filt_delta_w(std::optional<double> target, std::optional<double> actual,
                    const SpikeTrain& presyn, const KernelParams& p);

/// +1 for the label neuron, -1 for every other output.
std::vector<double> output_desirability(std::size_t label, std::size_t n_classes);

/// Affine map sending max to +1 and min to -1. An all-equal vector maps to all +1.
std::vector<double> normalize_desirability(std::span<const double> raw);

/// w_next^T * d_next, normalized. w_next has shape N_{l+1} x N_l.
std::vector<double> backpropagate_desirability(const Matrix& w_next, std::span<const double> d_next);

/// Target first-spike time per neuron: actual first spike minus delta_t when
/// d >= d_t (5 * layer_index ms stands in for a missing spike), and no target
/// (suppression) when d < d_t.
std::vector<std::optional<double>> assign_targets(std::span<const double> desirability,
                                                  std::span<const std::optional<double>> first_spikes,
                                                  std::size_t layer_index, const TrainConfig& cfg);

struct OptimizerState {
  std::vector<Matrix> mean_square;    // R, initialized to ones
  std::vector<Matrix> prev_scaled;    // w*_{b-1}; the initial weights before batch 1

  static OptimizerState init(const Network& net);
};

/// R <- beta R + (1-beta) dw^2 ; w <- w + eta dw / sqrt(eps_rms + R), per weight layer.
void rmsprop_step(Network& net, std::span<const Matrix> accumulated, OptimizerState& state,
                  const TrainConfig& cfg);

/// w*_ij = w_ij + gamma |w*_{b-1,ij}| (1 - s_i) with s_i the neuron's mean spike
/// count per sample. Returns the scaled matrix.
Matrix synaptic_scaling(const Matrix& weights, const Matrix& prev_scaled,
                        std::span<const double> mean_spike_counts, double gamma);

/// Applies synaptic_scaling to every hidden-layer weight matrix (output layer
/// untouched) and records the result as the next reference in `state`.
/// mean_spike_counts[h] holds per-neuron means for hidden layer h+1.
void apply_synaptic_scaling(Network& net, std::span<const std::vector<double>> mean_spike_counts,
                            OptimizerState& state, const TrainConfig& cfg);

/// Keep-mask: each neuron independently dropped with probability `rate`.
LayerMask dropout_mask(std::size_t n, double rate, Rng& rng);

}  // namespace filt_snn
