// filt-snn: command-line front end for training, evaluation, encoding
// inspection, single-neuron analysis and parameter sweeps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "filt_snn/analysis.hpp"
#include "filt_snn/config.hpp"
#include "filt_snn/dataset.hpp"
#include "filt_snn/encoder.hpp"
#include "filt_snn/errors.hpp"
#include "filt_snn/network.hpp"
#include "filt_snn/trainer.hpp"

namespace fs = std::filesystem;
using namespace filt_snn;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw UsageError(what + ": '" + s + "' is not a finite number");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const auto& part : split(s, ',')) out.push_back(parse_double(part, what));
  return out;
}

// "-" or an empty field marks a silent channel.
ChannelTimes parse_channels(const std::string& s, const std::string& what) {
  ChannelTimes out;
  for (const auto& part : split(s, ',')) {
    if (part.empty() || part == "-") {
      out.emplace_back();
    } else {
      out.emplace_back(parse_double(part, what));
    }
  }
  return out;
}

// "start:stop:step", inclusive of stop.
std::vector<double> parse_range(const std::string& s, const std::string& what) {
  const auto parts = split(s, ':');
  if (parts.size() != 3) throw UsageError(what + ": expected start:stop:step, got '" + s + "'");
  const double start = parse_double(parts[0], what);
  const double stop = parse_double(parts[1], what);
  const double step = parse_double(parts[2], what);
  if (!(step > 0.0)) throw UsageError(what + ": step must be > 0");
  if (stop < start) throw UsageError(what + ": stop must be >= start");
  const double n = std::floor((stop - start) / step + 1e-9);
  if (n > 1e7) throw UsageError(what + ": too many points");
  std::vector<double> xs;
  for (std::size_t k = 0; k <= static_cast<std::size_t>(n); ++k) xs.push_back(start + static_cast<double>(k) * step);
  return xs;
}

std::string fmt(double v, const char* spec = "%g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void emit_csv(const std::string& out_path, const std::vector<SeriesPoint>& points) {
  if (out_path.empty() || out_path == "-") {
    write_series_csv(std::cout, points);
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  write_series_csv(out, points);
}

// Shared config handling: file (kept verbatim), env override, then flags.
struct ConfigSource {
  std::string path;
  std::string data_dir;

  void add_to(CLI::App* cmd) {
    cmd->add_option("-c,--config", path, "JSON run configuration (defaults used when omitted)");
    cmd->add_option("--data", data_dir,
                    std::string("Dataset directory; overrides the config and $") + kDataDirEnv);
  }

  RunConfig load(std::string* verbatim = nullptr) const {
    RunConfig cfg;
    if (!path.empty()) {
      const std::string text = read_file(path);
      cfg = parse_run_config(text, path);
      if (verbatim) *verbatim = text;
    }
    apply_data_dir_env(cfg);
    if (!data_dir.empty()) cfg.data.dir = data_dir;
    return cfg;
  }
};

std::vector<RawImage> load_split(const DataPaths& data, bool train) {
  const fs::path images = data.dir / (train ? data.train_images : data.test_images);
  const fs::path labels = data.dir / (train ? data.train_labels : data.test_labels);
  auto all = load_idx_dataset(images, labels);
  const std::size_t count = train ? data.train_subset : data.test_subset;
  if (count == 0 || count >= all.size()) return all;
  const auto idx = subset_indices(all.size(), count, data.subset_seed + (train ? 0 : 1));
  std::vector<RawImage> picked;
  picked.reserve(idx.size());
  for (std::size_t i : idx) picked.push_back(all[i]);
  return picked;
}

struct Loaded {
  std::vector<EncodedSample> train;
  std::vector<EncodedSample> test;
};

Loaded load_encoded(const RunConfig& cfg) {
  Loaded d;
  d.train = encode_all(load_split(cfg.data, true), cfg.encoder);
  d.test = encode_all(load_split(cfg.data, false), cfg.encoder);
  if (d.train.empty()) throw DataError("training set is empty");
  if (d.test.empty()) throw DataError("test set is empty");
  return d;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  ConfigSource source;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> batches;
  std::optional<std::size_t> eval_every;
  std::optional<std::size_t> train_subset;
  std::optional<std::size_t> test_subset;
  std::optional<std::size_t> threads;
  std::string out;
  bool timing = false;
  bool quiet = false;
};

void apply_overrides(RunConfig& cfg, const TrainArgs& a) {
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.batches) cfg.train.batches = *a.batches;
  if (a.eval_every) cfg.train.eval_every = *a.eval_every;
  if (a.train_subset) cfg.data.train_subset = *a.train_subset;
  if (a.test_subset) cfg.data.test_subset = *a.test_subset;
  if (a.threads) cfg.train.threads = *a.threads;
  if (!a.out.empty()) cfg.output_dir = a.out;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void add_run_overrides(CLI::App* cmd, TrainArgs& a) {
  a.source.add_to(cmd);
  cmd->add_option("--seed", a.seed, "Override train.seed");
  cmd->add_option("--batches", a.batches, "Override train.batches");
  cmd->add_option("--eval-every", a.eval_every, "Override train.eval_every");
  cmd->add_option("--train-subset", a.train_subset, "Override data.train_subset (0 = all)");
  cmd->add_option("--test-subset", a.test_subset, "Override data.test_subset (0 = all)");
  cmd->add_option("--threads", a.threads, "Override train.threads (0 = all cores)");
  cmd->add_option("-o,--out", a.out, "Override output_dir");
  cmd->add_flag("--timing", a.timing, "Record wall-clock time per batch (metrics no longer byte-reproducible)");
  cmd->add_flag("-q,--quiet", a.quiet, "No progress lines on stderr");
}

int cmd_train(const TrainArgs& a) {
  std::string verbatim;
  RunConfig cfg = a.source.load(&verbatim);
  apply_overrides(cfg, a);
  const Loaded data = load_encoded(cfg);

  fs::create_directories(cfg.output_dir);
  write_file(cfg.output_dir / "config.json", verbatim.empty() ? dump_run_config(RunConfig{}) : verbatim);
  write_file(cfg.output_dir / "resolved.json", dump_run_config(cfg));

  const fs::path metrics_path = cfg.output_dir / "metrics.csv";
  std::ofstream metrics(metrics_path, std::ios::binary);
  if (!metrics) throw std::runtime_error("cannot write " + metrics_path.string());
  write_metrics_header(metrics);

  RunOptions options;
  options.init_scheme = cfg.init;
  options.params = cfg.kernel;
  options.record_wall_time = a.timing;
  options.on_row = [&](const MetricsRow& row) {
    write_metrics_row(metrics, row);
    metrics.flush();
    if (!a.quiet && row.test_acc) {
      std::cerr << "batch " << row.batch << "  test_acc " << fmt(*row.test_acc, "%.4f") << "  abstain "
                << fmt(*row.abstain_rate, "%.4f") << '\n';
    }
  };
  const RunResult result = train_run(cfg.topology, cfg.train, data.train, data.test, options);
  if (!metrics) throw std::runtime_error("write failed for " + metrics_path.string());
  save_checkpoint(cfg.output_dir / "checkpoint.bin", result.network);

  std::cout << "final test accuracy " << fmt(result.metrics.final_test_acc().value_or(0.0), "%.4f")
            << " (abstain rate " << fmt(result.metrics.final_abstain_rate().value_or(0.0), "%.4f") << ")\n";
  std::cout << "wrote " << cfg.output_dir.string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  ConfigSource source;
  std::string checkpoint;
  std::optional<std::size_t> test_subset;
  std::string split = "test";
  bool json = false;
};

int cmd_eval(const EvalArgs& a) {
  RunConfig cfg = a.source.load();
  if (a.test_subset) {
    (a.split == "train" ? cfg.data.train_subset : cfg.data.test_subset) = *a.test_subset;
  }
  const Network net = load_checkpoint(a.checkpoint);
  const auto samples = encode_all(load_split(cfg.data, a.split == "train"), cfg.encoder);
  if (samples.empty()) throw DataError("evaluation set is empty");
  const EvalResult r = evaluate(net, samples, cfg.train.window, cfg.train.threads);
  if (a.json) {
    nlohmann::json doc = {{"samples", r.samples},
                          {"correct", r.correct},
                          {"abstained", r.abstained},
                          {"accuracy", r.accuracy()},
                          {"abstain_rate", r.abstain_rate()},
                          {"mean_spikes", r.mean_spikes}};
    std::cout << doc.dump(2) << '\n';
  } else {
    std::cout << "samples " << r.samples << "\naccuracy " << fmt(r.accuracy(), "%.4f") << "\nabstain_rate "
              << fmt(r.abstain_rate(), "%.4f") << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- encode

struct EncodeArgs {
  ConfigSource source;
  std::size_t index = 0;
  std::string split = "test";
  std::string images;
  std::string csv;
  bool json = false;
};

int cmd_encode(const EncodeArgs& a) {
  const RunConfig cfg = a.source.load();
  std::array<std::uint8_t, kImagePixels> pixels{};
  std::optional<int> label;
  if (!a.images.empty()) {
    const auto images = load_idx_images(a.images);
    if (a.index >= images.size()) {
      throw UsageError("index " + std::to_string(a.index) + " out of range (" + std::to_string(images.size()) +
                       " images)");
    }
    pixels = images[a.index];
  } else {
    const auto data = load_split(cfg.data, a.split == "train");
    if (a.index >= data.size()) {
      throw UsageError("index " + std::to_string(a.index) + " out of range (" + std::to_string(data.size()) +
                       " images)");
    }
    pixels = data[a.index].pixels;
    label = data[a.index].label;
  }
  const EncodedSample s = encode_image(pixels, static_cast<std::uint8_t>(label.value_or(0)), cfg.encoder);

  if (!a.csv.empty()) {
    std::ofstream out(a.csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + a.csv);
    out << "channel,row,col,time\n";
    for (std::size_t c = 0; c < s.spike_times.size(); ++c) {
      if (s.spike_times[c]) {
        out << c << ',' << c / 28 << ',' << c % 28 << ',' << fmt(*s.spike_times[c], "%.17g") << '\n';
      }
    }
  }

  if (a.json) {
    nlohmann::json spikes = nlohmann::json::array();
    for (std::size_t c = 0; c < s.spike_times.size(); ++c) {
      if (s.spike_times[c]) spikes.push_back({{"channel", c}, {"time", *s.spike_times[c]}});
    }
    nlohmann::json doc = {{"index", a.index}, {"spiking_channels", s.spiking_channels()}, {"spikes", spikes}};
    doc["label"] = label ? nlohmann::json(*label) : nlohmann::json(nullptr);
    std::cout << doc.dump(2) << '\n';
    return kOk;
  }

  std::cout << "image " << a.index;
  if (label) std::cout << " label " << *label;
  std::cout << '\n';
  if (s.spiking_channels() == 0) {
    std::cout << "no spikes\n";
    return kOk;
  }
  std::cout << s.spiking_channels() << " spiking channels\n";
  for (std::size_t c = 0; c < s.spike_times.size(); ++c) {
    if (s.spike_times[c]) std::cout << "channel " << c << " t=" << fmt(*s.spike_times[c], "%.4f") << " ms\n";
  }
  return kOk;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string inputs = "0,2";
  double shift = 0.5;
  std::string range = "0.01:10:0.01";
  std::string shift_range = "0.1:2.0:0.1";
  std::string gaps = "0.5,1,2,3,4";
  std::size_t iterations = 200;
  double eta = kAnalysisEta;
  double offset = 1.0;
  std::string weights;
  std::string train_a = "0,2";
  std::string train_b = "1,0";
  std::uint64_t seed = 1;
  std::string out;
};

EquilibriumProblem problem_from(const AnalyzeArgs& a) {
  EquilibriumProblem prob;
  prob.input_times = parse_list(a.inputs, "--inputs");
  if (prob.input_times.empty()) throw UsageError("--inputs: at least one spike time is required");
  prob.delta_t = a.shift;
  try {
    prob.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return prob;
}

int cmd_delta_u(const AnalyzeArgs& a) {
  const EquilibriumProblem prob = problem_from(a);
  const auto xs = parse_range(a.range, "--range");
  if (xs.front() <= 0.0 || xs.back() > prob.window.duration) {
    throw UsageError("--range must lie within (0, " + fmt(prob.window.duration) + "]");
  }
  std::vector<SeriesPoint> pts;
  for (double t : xs) {
    const auto terms = delta_u_terms(t, prob);
    double total = 0.0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      pts.push_back({t, "input_" + std::to_string(k + 1), terms[k]});
      total += terms[k];
    }
    pts.push_back({t, "total", total});
  }
  if (const auto eq = find_t_E(prob)) {
    pts.push_back({eq->t_e, "t_E", 0.0});
    std::cerr << "t_E = " << fmt(eq->t_e, "%.6f") << " ms\n";
  } else {
    std::cerr << "no equilibrium in the window\n";
  }
  emit_csv(a.out, pts);
  return kOk;
}

int cmd_t_e_sweep(const AnalyzeArgs& a) {
  const auto shifts = parse_range(a.shift_range, "--shift-range");
  const auto gaps = parse_list(a.gaps, "--gaps");
  for (double g : gaps) {
    if (g < 0.0) throw UsageError("--gaps must be >= 0");
  }
  if (shifts.front() < 0.0) throw UsageError("--shift-range must be >= 0");

  struct Job {
    std::string series;
    std::vector<double> inputs;
    double shift;
    std::optional<Equilibrium> result;
  };
  std::vector<Job> jobs;
  for (double s : shifts) {
    jobs.push_back({"single", {0.0}, s, {}});
    for (double g : gaps) jobs.push_back({"gap=" + fmt(g), {0.0, g}, s, {}});
  }
  parallel_for(jobs.size(), 0, [&](std::size_t i) {
    EquilibriumProblem prob;
    prob.input_times = jobs[i].inputs;
    prob.delta_t = jobs[i].shift;
    jobs[i].result = find_t_E(prob);
  });

  std::vector<SeriesPoint> pts;
  for (const auto& j : jobs) {
    if (!j.result) continue;
    pts.push_back({j.shift, j.series, j.result->t_e});
    if (j.result->attractor_roots > 1) {
      pts.push_back({j.shift, j.series + ":roots", static_cast<double>(j.result->attractor_roots)});
    }
  }
  emit_csv(a.out, pts);
  return kOk;
}

int cmd_converge(const AnalyzeArgs& a) {
  const EquilibriumProblem prob = problem_from(a);
  const auto eq = find_t_E(prob);
  std::vector<std::pair<std::string, std::vector<double>>> starts;
  if (!a.weights.empty()) {
    starts.emplace_back("run", parse_list(a.weights, "--weights"));
  } else {
    if (!eq) throw UsageError("no equilibrium for these inputs; pass --weights explicitly");
    if (!(a.offset > 0.0)) throw UsageError("--offset must be > 0");
    const double dt = prob.window.dt;
    // Grid snapping can only move the spike earlier, so ask for one step extra above.
    const double above = equal_weight_for_spike(prob, eq->t_e + a.offset + dt);
    const double below = equal_weight_for_spike(prob, eq->t_e - a.offset);
    starts.emplace_back("from_above", std::vector<double>(prob.input_times.size(), above));
    starts.emplace_back("from_below", std::vector<double>(prob.input_times.size(), below));
  }

  std::vector<SeriesPoint> pts;
  std::size_t last = 0;
  for (const auto& [name, w] : starts) {
    if (w.size() != prob.input_times.size()) throw UsageError("--weights needs one value per input");
    ConvergenceResult r;
    try {
      r = convergence_run(prob, w, a.iterations, a.eta);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    for (std::size_t i = 0; i < r.spike_times.size(); ++i) {
      pts.push_back({static_cast<double>(i), name, r.spike_times[i]});
    }
    last = std::max(last, r.spike_times.size());
    if (r.diverged) {
      std::cerr << name << ": neuron fell silent after " << r.spike_times.size() << " iterations\n";
      pts.push_back({static_cast<double>(r.spike_times.size()), name + ":silent", 1.0});
    }
  }
  if (eq) {
    pts.push_back({0.0, "t_E", eq->t_e});
    pts.push_back({static_cast<double>(last ? last - 1 : 0), "t_E", eq->t_e});
  }
  emit_csv(a.out, pts);
  return kOk;
}

int cmd_two_train(const AnalyzeArgs& a) {
  TwoTrainSetup setup = default_two_train_setup();
  setup.train_a = parse_channels(a.train_a, "--train-a");
  setup.train_b = parse_channels(a.train_b, "--train-b");
  if (!a.weights.empty()) {
    setup.initial_weights = parse_list(a.weights, "--weights");
  } else {
    setup.initial_weights.assign(setup.train_a.size(), 10.0);
  }
  setup.delta_t = a.shift;
  setup.eta = a.eta;
  setup.iterations = a.iterations;
  setup.seed = a.seed;
  TwoTrainResult r;
  try {
    r = two_train_run(setup);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::vector<SeriesPoint> pts;
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    pts.push_back({static_cast<double>(i), r.steps[i].train == 0 ? "train_a" : "train_b", r.steps[i].spike_time});
  }
  const double last = r.steps.empty() ? 0.0 : static_cast<double>(r.steps.size() - 1);
  if (r.t_e_a) {
    pts.push_back({0.0, "t_E_a", r.t_e_a->t_e});
    pts.push_back({last, "t_E_a", r.t_e_a->t_e});
  }
  if (r.t_e_b) {
    pts.push_back({0.0, "t_E_b", r.t_e_b->t_e});
    pts.push_back({last, "t_E_b", r.t_e_b->t_e});
  }
  if (r.diverged) std::cerr << "neuron fell silent after " << r.steps.size() << " iterations\n";
  emit_csv(a.out, pts);
  return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  TrainArgs run;
  std::string axis;
  std::string values;
  std::size_t seeds = 3;
  std::size_t jobs = 1;
};

int cmd_sweep(const SweepArgs& a) {
  std::string verbatim;
  RunConfig base = a.run.source.load(&verbatim);
  TrainArgs overrides = a.run;
  if (overrides.out.empty() && a.run.source.path.empty()) overrides.out = "runs/sweep";
  apply_overrides(base, overrides);

  const auto values = parse_list(a.values, "--values");
  if (values.empty()) throw UsageError("--values must list at least one value");
  if (a.seeds == 0) throw UsageError("--seeds must be >= 1");

  struct Run {
    std::string series;
    RunConfig cfg;
    std::optional<RunMetrics> metrics;
    std::string error;
  };
  std::vector<Run> runs;
  for (double v : values) {
    RunConfig cfg = base;
    std::string series;
    if (a.axis == "hidden") {
      if (v < 1.0 || v != std::floor(v)) throw UsageError("--values: hidden sizes must be positive integers");
      cfg.topology.layer_sizes = {kImagePixels, static_cast<std::size_t>(v), 10};
      series = "hidden=" + fmt(v);
    } else if (a.axis == "eta") {
      cfg.train.eta = v;
      series = "eta=" + fmt(v);
    } else {
      cfg.train.d_t = v;
      series = "d_t=" + fmt(v);
    }
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(series + ": " + e.what());
    }
    for (std::size_t s = 0; s < a.seeds; ++s) {
      Run run{series, cfg, std::nullopt, {}};
      run.cfg.train.seed = base.train.seed + s;
      runs.push_back(std::move(run));
    }
  }

  const Loaded data = load_encoded(base);
  fs::create_directories(base.output_dir);
  write_file(base.output_dir / "config.json", verbatim.empty() ? dump_run_config(RunConfig{}) : verbatim);
  write_file(base.output_dir / "resolved.json", dump_run_config(base));

  std::mutex log_mu;
  parallel_for(runs.size(), a.jobs, [&](std::size_t i) {
    Run& run = runs[i];
    try {
      RunOptions options;
      options.init_scheme = run.cfg.init;
      options.params = run.cfg.kernel;
      options.record_wall_time = a.run.timing;
      RunResult r = train_run(run.cfg.topology, run.cfg.train, data.train, data.test, options);
      std::ostringstream csv;
      write_metrics_header(csv);
      for (const auto& row : r.metrics.rows) write_metrics_row(csv, row);
      write_file(base.output_dir / ("metrics_" + run.series + "_seed" + std::to_string(run.cfg.train.seed) + ".csv"),
                 csv.str());
      run.metrics = std::move(r.metrics);
      if (!a.run.quiet) {
        std::lock_guard lock(log_mu);
        std::cerr << run.series << " seed " << run.cfg.train.seed << ": final test accuracy "
                  << fmt(run.metrics->final_test_acc().value_or(0.0), "%.4f") << '\n';
      }
    } catch (const std::exception& e) {
      run.error = e.what();
      std::lock_guard lock(log_mu);
      std::cerr << run.series << " seed " << run.cfg.train.seed << ": failed: " << e.what() << '\n';
    }
  });

  // batch -> per-series accuracies, in value order
  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, std::vector<double>>> acc;
  std::ostringstream failures;
  std::size_t ok = 0;
  for (const auto& run : runs) {
    if (std::find(order.begin(), order.end(), run.series) == order.end()) order.push_back(run.series);
    if (!run.metrics) {
      failures << run.series << ',' << run.cfg.train.seed << ',' << '"' << run.error << '"' << '\n';
      continue;
    }
    ++ok;
    for (const auto& row : run.metrics->rows) {
      if (row.test_acc) acc[run.series][row.batch].push_back(*row.test_acc);
    }
  }

  std::ostringstream csv;
  csv << "batch,series,mean,std,n\n";
  for (const auto& series : order) {
    for (const auto& [batch, xs] : acc[series]) {
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mean) * (x - mean);
      const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
      csv << batch << ',' << series << ',' << fmt(mean, "%.6f") << ',' << fmt(sd, "%.6f") << ',' << xs.size()
          << '\n';
    }
  }
  write_file(base.output_dir / "sweep.csv", csv.str());
  if (ok != runs.size()) {
    write_file(base.output_dir / "failures.csv", "series,seed,error\n" + failures.str());
  }
  std::cout << "wrote " << (base.output_dir / "sweep.csv").string() << " (" << ok << " of " << runs.size()
            << " runs succeeded)\n";
  return ok == 0 ? kRuntime : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking network training with the FILT rule and desirability feedback"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a classifier and write metrics, checkpoint and config copies");
  add_run_overrides(train, train_args);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test set");
  eval_args.source.add_to(eval);
  eval->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint written by train")->required();
  eval->add_option("--subset", eval_args.test_subset, "Evaluate on this many images (0 = all)");
  eval->add_option("--split", eval_args.split, "Dataset split")->check(CLI::IsMember({"train", "test"}));
  eval->add_flag("--json", eval_args.json, "Machine-readable output");

  EncodeArgs encode_args;
  auto* encode = app.add_subcommand("encode", "Print the input spike times of one image");
  encode_args.source.add_to(encode);
  encode->add_option("-i,--index", encode_args.index, "Image index");
  encode->add_option("--split", encode_args.split, "Dataset split")->check(CLI::IsMember({"train", "test"}));
  encode->add_option("--images", encode_args.images, "Read from this IDX image file instead of the dataset");
  encode->add_option("--csv", encode_args.csv, "Also write a channel,row,col,time raster CSV");
  encode->add_flag("--json", encode_args.json, "Machine-readable output");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Single-neuron equilibrium experiments (CSV: x,series,value)");
  analyze->require_subcommand(1);
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--shift", an.shift, "Target shift delta_t (ms)")->capture_default_str();
    cmd->add_option("-o,--out", an.out, "Output CSV (stdout when omitted)");
  };
  auto* du = analyze->add_subcommand("delta-u", "Potential change at the spike time, total and per input");
  du->add_option("--inputs", an.inputs, "Input spike times, comma separated (ms)")->capture_default_str();
  du->add_option("--range", an.range, "Spike times start:stop:step (ms)")->capture_default_str();
  add_common(du);
  auto* sweep_te = analyze->add_subcommand("t-e-sweep", "Equilibrium time versus shift, one and two inputs");
  sweep_te->add_option("--shift-range", an.shift_range, "Shifts start:stop:step (ms)")->capture_default_str();
  sweep_te->add_option("--gaps", an.gaps, "Second-input delays for two-input curves (ms)")->capture_default_str();
  sweep_te->add_option("-o,--out", an.out, "Output CSV (stdout when omitted)");
  auto* conv = analyze->add_subcommand("converge", "Spike time trajectories from above and below t_E");
  conv->add_option("--inputs", an.inputs, "Input spike times, comma separated (ms)")->capture_default_str();
  conv->add_option("--iterations", an.iterations, "Training iterations")->capture_default_str();
  conv->add_option("--eta", an.eta, "Learning rate")->capture_default_str();
  conv->add_option("--offset", an.offset, "Initial distance from t_E (ms)")->capture_default_str();
  conv->add_option("--weights", an.weights, "Explicit initial weights (single run)");
  add_common(conv);
  auto* two = analyze->add_subcommand("two-train", "Random alternation between two input trains");
  two->add_option("--train-a", an.train_a, "Per-channel times of train a; '-' marks silence")->capture_default_str();
  two->add_option("--train-b", an.train_b, "Per-channel times of train b; '-' marks silence")->capture_default_str();
  two->add_option("--weights", an.weights, "Initial weights (default 10 per channel)");
  two->add_option("--eta", an.eta, "Learning rate")->capture_default_str();
  two->add_option("--seed", an.seed, "Presentation order seed")->capture_default_str();
  an.iterations = 200;
  two->add_option("--iterations", an.iterations, "Training iterations (default 300)");
  add_common(two);

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Train one run per value and seed; aggregate test accuracy curves");
  add_run_overrides(sweep, sweep_args.run);
  sweep->add_option("--axis", sweep_args.axis, "Swept parameter")
      ->required()
      ->check(CLI::IsMember({"hidden", "eta", "dt-threshold"}));
  sweep->add_option("--values", sweep_args.values, "Comma-separated values")->required();
  sweep->add_option("--seeds", sweep_args.seeds, "Seeds per value, counting up from train.seed")
      ->capture_default_str();
  sweep->add_option("-j,--jobs", sweep_args.jobs, "Concurrent runs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(train_args);
    if (*eval) return cmd_eval(eval_args);
    if (*encode) return cmd_encode(encode_args);
    if (*du) return cmd_delta_u(an);
    if (*sweep_te) return cmd_t_e_sweep(an);
    if (*conv) return cmd_converge(an);
    if (*two) {
      if (two->count("--iterations") == 0) an.iterations = 300;
      return cmd_two_train(an);
    }
    if (*sweep) return cmd_sweep(sweep_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
