#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "filt_snn/encoder.hpp"
#include "filt_snn/network.hpp"
#include "filt_snn/plasticity.hpp"

namespace filt_snn {

/// Desirability vectors for layers 1..L (index 0 is layer 1), one set per class label.
using DesirabilityTable = std::vector<std::vector<std::vector<double>>>;

/// Top-down desirabilities for every possible label, from the current weights.
DesirabilityTable desirability_table(const Network& net);

struct SampleUpdate {
  std::vector<Matrix> delta;  // unit-rate weight changes, one per weight layer
  ForwardResult forward;
};

/// Forward pass plus the per-synapse learning-rule changes for one sample.
/// Dropped hidden neurons neither spike nor receive updates.
SampleUpdate sample_update(const Network& net, const EncodedSample& sample,
                           const std::vector<std::vector<double>>& desirability,
                           std::span<const LayerMask> masks, const TrainConfig& cfg);

struct BatchStats {
  std::size_t samples = 0;
  std::size_t decisions = 0;
  std::size_t correct = 0;
  std::size_t abstained = 0;
  std::vector<double> mean_spikes;  // per non-input layer, per neuron per sample
  double wall_ms = 0.0;
};

/// Mask stream for sample `index` of batch `batch` under run seed `seed`.
std::vector<LayerMask> sample_masks(const Network& net, double rate, std::uint64_t seed,
                                    std::size_t batch, std::size_t index);

/// One batch: desirabilities from batch-start weights, per-sample forward and
/// updates (in parallel, reduced in sample order), then RMSprop and synaptic
/// scaling of the hidden layers.
BatchStats train_batch(Network& net, OptimizerState& state, std::span<const EncodedSample* const> batch,
                       const TrainConfig& cfg, std::size_t batch_number);

/// Summed (or averaged, per cfg) unit-rate changes for a batch without applying them.
std::vector<Matrix> accumulate_batch_delta(const Network& net, std::span<const EncodedSample* const> batch,
                                           const TrainConfig& cfg, std::size_t batch_number,
                                           std::size_t threads);

struct EvalResult {
  std::size_t samples = 0;
  std::size_t correct = 0;
  std::size_t abstained = 0;
  std::vector<double> mean_spikes;

  double accuracy() const { return samples ? static_cast<double>(correct) / samples : 0.0; }
  double abstain_rate() const { return samples ? static_cast<double>(abstained) / samples : 0.0; }
};

/// Dropout-free classification; abstentions count as errors.
EvalResult evaluate(const Network& net, std::span<const EncodedSample> samples,
                    const SimWindow& window, std::size_t threads = 0);

struct MetricsRow {
  std::size_t batch = 0;
  std::optional<double> train_acc;
  std::optional<double> test_acc;
  std::optional<double> abstain_rate;
  double mean_hidden_spikes = 0.0;
  double mean_output_spikes = 0.0;
  double wall_ms = 0.0;
};

struct RunMetrics {
  std::vector<MetricsRow> rows;

  std::optional<double> final_test_acc() const;
  std::optional<double> final_abstain_rate() const;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

struct RunOptions {
  InitScheme init_scheme = InitScheme::kScaledUniform;
  KernelParams params{};
  /// When false the wall_ms column is written as 0 so metrics files are reproducible.
  bool record_wall_time = false;
  std::function<void(const MetricsRow&)> on_row;
};

struct RunResult {
  RunMetrics metrics;
  Network network;
};

/// Full training run: init, batches drawn with replacement, evaluation every
/// cfg.eval_every batches (and after the last), fully determined by cfg.seed.
RunResult train_run(const Topology& topology, const TrainConfig& cfg,
                    std::span<const EncodedSample> train, std::span<const EncodedSample> test,
                    const RunOptions& options = {});

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware concurrency).
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace filt_snn
