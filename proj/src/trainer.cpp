#include "filt_snn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

#include "filt_snn/dataset.hpp"
#include "filt_snn/rng.hpp"

namespace filt_snn {

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

DesirabilityTable desirability_table(const Network& net) {
  const std::size_t depth = net.topology.depth();
  DesirabilityTable table(net.topology.classes());
  for (std::size_t label = 0; label < table.size(); ++label) {
    auto& layers = table[label];
    layers.resize(depth);
    layers[depth - 1] = output_desirability(label, net.topology.classes());
    for (std::size_t l = depth - 1; l >= 1; --l) {
      // weights[l] connects layer l to layer l+1.
      layers[l - 1] = backpropagate_desirability(net.weights[l], layers[l]);
    }
  }
  return table;
}

SampleUpdate sample_update(const Network& net, const EncodedSample& sample,
                           const std::vector<std::vector<double>>& desirability,
                           std::span<const LayerMask> masks, const TrainConfig& cfg) {
  const std::size_t depth = net.topology.depth();
  if (desirability.size() != depth) {
    throw std::invalid_argument("sample_update: need a desirability vector per non-input layer");
  }
  SampleUpdate up;
  up.forward = forward(net, sample, cfg.window, masks);
  up.delta.reserve(depth);

  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < depth; ++k) {
    const std::size_t layer = k + 1;
    const auto& post = up.forward.spikes[layer];
    const auto& pre = up.forward.spikes[k];
    Matrix delta(post.size(), pre.size());

    std::vector<std::optional<double>> firsts(post.size());
    for (std::size_t i = 0; i < post.size(); ++i) firsts[i] = post[i].first();
    const auto targets = assign_targets(desirability[k], firsts, layer, cfg);

    active.clear();
    for (std::size_t j = 0; j < pre.size(); ++j) {
      if (!pre[j].empty()) active.push_back(j);
    }
    const LayerMask* keep = (!masks.empty() && layer < depth) ? &masks[k] : nullptr;
    for (std::size_t i = 0; i < post.size(); ++i) {
      if (keep != nullptr && !(*keep)[i]) continue;
      if (!targets[i] && !firsts[i]) continue;
      auto row = delta.row(i);
      for (std::size_t j : active) {
        row[j] = filt_delta_w(targets[i], firsts[i], pre[j], net.params);
      }
    }
    up.delta.push_back(std::move(delta));
  }
  return up;
}

std::vector<LayerMask> sample_masks(const Network& net, double rate, std::uint64_t seed,
                                    std::size_t batch, std::size_t index) {
  const std::size_t hidden = net.topology.depth() - 1;
  if (hidden == 0 || rate == 0.0) {
    return {};
  }
  Rng rng(derive_seed(derive_seed(seed, 0xd209, batch), index));
  std::vector<LayerMask> masks;
  masks.reserve(hidden);
  for (std::size_t h = 0; h < hidden; ++h) {
    masks.push_back(dropout_mask(net.topology.layer_sizes[h + 1], rate, rng));
  }
  return masks;
}

namespace {

std::vector<SampleUpdate> run_samples(const Network& net, std::span<const EncodedSample* const> batch,
                                      const TrainConfig& cfg, std::size_t batch_number,
                                      std::size_t threads, std::vector<std::vector<LayerMask>>& masks) {
  const auto table = desirability_table(net);
  masks.resize(batch.size());
  std::vector<SampleUpdate> updates(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t s) {
    const EncodedSample& sample = *batch[s];
    if (sample.label >= table.size()) {
      throw std::invalid_argument("train: label " + std::to_string(sample.label) +
                                  " exceeds the output layer");
    }
    masks[s] = sample_masks(net, cfg.dropout_rate, cfg.seed, batch_number, s);
    updates[s] = sample_update(net, sample, table[sample.label], masks[s], cfg);
  });
  return updates;
}

std::vector<Matrix> reduce_updates(const Network& net, const std::vector<SampleUpdate>& updates,
                                   const TrainConfig& cfg) {
  std::vector<Matrix> total;
  for (const auto& w : net.weights) total.emplace_back(w.rows(), w.cols());
  for (const auto& up : updates) {
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += up.delta[k];
  }
  if (!cfg.sum_batch_updates && !updates.empty()) {
    const double scale = 1.0 / static_cast<double>(updates.size());
    for (auto& m : total) {
      for (double& v : m.data()) v *= scale;
    }
  }
  return total;
}

double spike_mean(const std::vector<SpikeTrain>& layer) {
  std::size_t n = 0;
  for (const auto& t : layer) n += t.size();
  return layer.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(layer.size());
}

}  // namespace

std::vector<Matrix> accumulate_batch_delta(const Network& net, std::span<const EncodedSample* const> batch,
                                           const TrainConfig& cfg, std::size_t batch_number,
                                           std::size_t threads) {
  std::vector<std::vector<LayerMask>> masks;
  const auto updates = run_samples(net, batch, cfg, batch_number, threads, masks);
  return reduce_updates(net, updates, cfg);
}

BatchStats train_batch(Network& net, OptimizerState& state, std::span<const EncodedSample* const> batch,
                       const TrainConfig& cfg, std::size_t batch_number) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::vector<LayerMask>> masks;
  const auto updates = run_samples(net, batch, cfg, batch_number, cfg.threads, masks);
  const auto total = reduce_updates(net, updates, cfg);

  const std::size_t depth = net.topology.depth();
  BatchStats stats;
  stats.samples = batch.size();
  stats.mean_spikes.assign(depth, 0.0);

  // Per hidden neuron: spikes summed over the samples in which it was kept.
  std::vector<std::vector<double>> spike_sum(depth - 1);
  std::vector<std::vector<double>> kept(depth - 1);
  for (std::size_t h = 0; h + 1 < depth; ++h) {
    spike_sum[h].assign(net.topology.layer_sizes[h + 1], 0.0);
    kept[h].assign(net.topology.layer_sizes[h + 1], 0.0);
  }

  for (std::size_t s = 0; s < updates.size(); ++s) {
    const auto& fwd = updates[s].forward;
    if (fwd.decision) {
      ++stats.decisions;
      if (*fwd.decision == batch[s]->label) ++stats.correct;
    } else {
      ++stats.abstained;
    }
    for (std::size_t k = 0; k < depth; ++k) {
      stats.mean_spikes[k] += spike_mean(fwd.spikes[k + 1]);
    }
    for (std::size_t h = 0; h + 1 < depth; ++h) {
      const auto& layer = fwd.spikes[h + 1];
      for (std::size_t i = 0; i < layer.size(); ++i) {
        if (!masks[s].empty() && !masks[s][h][i]) continue;
        spike_sum[h][i] += static_cast<double>(layer[i].size());
        kept[h][i] += 1.0;
      }
    }
  }
  if (!updates.empty()) {
    for (double& m : stats.mean_spikes) m /= static_cast<double>(updates.size());
  }

  rmsprop_step(net, total, state, cfg);

  std::vector<std::vector<double>> mean_counts(depth - 1);
  for (std::size_t h = 0; h + 1 < depth; ++h) {
    mean_counts[h].resize(spike_sum[h].size());
    for (std::size_t i = 0; i < spike_sum[h].size(); ++i) {
      // A neuron dropped from every sample gets no correction.
      mean_counts[h][i] = kept[h][i] > 0.0 ? spike_sum[h][i] / kept[h][i] : 1.0;
    }
  }
  apply_synaptic_scaling(net, mean_counts, state, cfg);

  stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

EvalResult evaluate(const Network& net, std::span<const EncodedSample> samples,
                    const SimWindow& window, std::size_t threads) {
  std::vector<ForwardResult> results(samples.size());
  parallel_for(samples.size(), threads,
               [&](std::size_t i) { results[i] = forward(net, samples[i], window); });
  EvalResult ev;
  ev.samples = samples.size();
  ev.mean_spikes.assign(net.topology.depth(), 0.0);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.decision) {
      ++ev.abstained;
    } else if (*r.decision == samples[i].label) {
      ++ev.correct;
    }
    for (std::size_t k = 0; k < ev.mean_spikes.size(); ++k) {
      ev.mean_spikes[k] += spike_mean(r.spikes[k + 1]);
    }
  }
  if (!results.empty()) {
    for (double& m : ev.mean_spikes) m /= static_cast<double>(results.size());
  }
  return ev;
}

std::optional<double> RunMetrics::final_test_acc() const {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (it->test_acc) return it->test_acc;
  }
  return std::nullopt;
}

std::optional<double> RunMetrics::final_abstain_rate() const {
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if (it->abstain_rate) return it->abstain_rate;
  }
  return std::nullopt;
}

void write_metrics_header(std::ostream& out) {
  out << "batch,train_acc,test_acc,abstain_rate,mean_hidden_spikes,mean_output_spikes,wall_ms\n";
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fixed(const std::optional<double>& v, int digits) {
  return v ? fixed(*v, digits) : std::string{};
}

// Mean over all hidden neurons of the per-layer means.
double hidden_mean(const Network& net, const std::vector<double>& per_layer) {
  double sum = 0.0;
  double n = 0.0;
  for (std::size_t k = 0; k + 1 < per_layer.size(); ++k) {
    const double size = static_cast<double>(net.topology.layer_sizes[k + 1]);
    sum += per_layer[k] * size;
    n += size;
  }
  return n > 0.0 ? sum / n : 0.0;
}

}  // namespace

void write_metrics_row(std::ostream& out, const MetricsRow& row) {
  out << row.batch << ',' << fixed(row.train_acc, 6) << ',' << fixed(row.test_acc, 6) << ','
      << fixed(row.abstain_rate, 6) << ',' << fixed(row.mean_hidden_spikes, 6) << ','
      << fixed(row.mean_output_spikes, 6) << ',' << fixed(row.wall_ms, 3) << '\n';
}

RunResult train_run(const Topology& topology, const TrainConfig& cfg,
                    std::span<const EncodedSample> train, std::span<const EncodedSample> test,
                    const RunOptions& options) {
  cfg.validate();
  topology.validate();
  if (cfg.batches > 0 && train.size() < cfg.batch_size) {
    throw std::invalid_argument("train_run: training set smaller than one batch");
  }

  RunResult result{{}, init_weights(topology, cfg.seed, options.init_scheme, options.params)};
  Network& net = result.network;
  auto state = OptimizerState::init(net);
  const auto plan = cfg.batches > 0 ? make_batches(train.size(), cfg.batch_size, cfg.batches, cfg.seed)
                                    : BatchPlan{};

  auto emit = [&](MetricsRow row) {
    if (!options.record_wall_time) row.wall_ms = 0.0;
    if (options.on_row) options.on_row(row);
    result.metrics.rows.push_back(row);
  };

  {
    const auto start = std::chrono::steady_clock::now();
    const auto ev = evaluate(net, test, cfg.window, cfg.threads);
    MetricsRow row;
    row.batch = 0;
    row.test_acc = ev.accuracy();
    row.abstain_rate = ev.abstain_rate();
    row.mean_hidden_spikes = hidden_mean(net, ev.mean_spikes);
    row.mean_output_spikes = ev.mean_spikes.back();
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    emit(row);
  }

  std::vector<const EncodedSample*> batch(cfg.batch_size);
  for (std::size_t b = 1; b <= plan.size(); ++b) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t s = 0; s < cfg.batch_size; ++s) batch[s] = &train[plan[b - 1][s]];
    const auto stats = train_batch(net, state, batch, cfg, b);

    MetricsRow row;
    row.batch = b;
    row.train_acc = static_cast<double>(stats.correct) / static_cast<double>(stats.samples);
    row.mean_hidden_spikes = hidden_mean(net, stats.mean_spikes);
    row.mean_output_spikes = stats.mean_spikes.back();
    if (b % cfg.eval_every == 0 || b == plan.size()) {
      const auto ev = evaluate(net, test, cfg.window, cfg.threads);
      row.test_acc = ev.accuracy();
      row.abstain_rate = ev.abstain_rate();
    }
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    emit(row);
  }
  return result;
}

}  // namespace filt_snn
