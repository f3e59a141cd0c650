#include "filt_snn/network.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "filt_snn/errors.hpp"
#include "filt_snn/rng.hpp"

namespace filt_snn {

void Topology::validate() const {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("topology: need at least an input and an output layer");
  }
  for (std::size_t n : layer_sizes) {
    if (n == 0) {
      throw std::invalid_argument("topology: layer sizes must be >= 1");
    }
  }
}

std::string_view to_string(InitScheme s) {
  switch (s) {
    case InitScheme::kScaledUniform:
      return "scaled_uniform";
    case InitScheme::kZero:
      return "zero";
  }
  return "unknown";
}

InitScheme init_scheme_from_string(std::string_view s) {
  if (s == "scaled_uniform") return InitScheme::kScaledUniform;
  if (s == "zero") return InitScheme::kZero;
  throw std::invalid_argument("unknown init scheme '" + std::string(s) + "'");
}

void Network::validate() const {
  topology.validate();
  if (weights.size() != topology.depth()) {
    throw std::invalid_argument("network: weight matrix count does not match topology");
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k].rows() != topology.layer_sizes[k + 1] ||
        weights[k].cols() != topology.layer_sizes[k]) {
      throw std::invalid_argument("network: weight matrix " + std::to_string(k) +
                                  " has the wrong shape");
    }
    for (double w : weights[k].data()) {
      if (!std::isfinite(w)) {
        throw std::invalid_argument("network: non-finite weight");
      }
    }
  }
}

double scaled_uniform_center(std::size_t fan_in, double active_fraction, const KernelParams& p) {
  return p.v_t / (active_fraction * static_cast<double>(fan_in) * p.psp_peak());
}

Network init_weights(const Topology& topology, std::uint64_t seed, InitScheme scheme,
                     const KernelParams& params) {
  topology.validate();
  params.validate();
  Network net{topology, {}, params, scheme, seed};
  for (std::size_t k = 0; k < topology.depth(); ++k) {
    Matrix w(topology.layer_sizes[k + 1], topology.layer_sizes[k]);
    if (scheme == InitScheme::kScaledUniform) {
      Rng rng(derive_seed(seed, 0x1417, k));
      const double f = k == 0 ? kInputActiveFraction : kHiddenActiveFraction;
      const double hi = 2.0 * scaled_uniform_center(w.cols(), f, params);
      for (double& x : w.data()) x = rng.uniform(0.0, hi);
    }
    net.weights.push_back(std::move(w));
  }
  return net;
}

std::vector<SpikeTrain> simulate_layer(const Matrix& weights, std::span<const SpikeTrain> pre,
                                       const KernelParams& p, const SimWindow& window,
                                       const LayerMask* keep) {
  const std::size_t n_grid = window.steps() + 1;
  // One PSP row per presynaptic spike, ordered by (source, spike).
  std::vector<std::size_t> source;
  std::vector<double> table;
  for (std::size_t j = 0; j < pre.size(); ++j) {
    for (double tj : pre[j].times()) {
      source.push_back(j);
      for (std::size_t k = 0; k < n_grid; ++k) {
        table.push_back(psp_kernel(window.time_at(k) - tj, p));
      }
    }
  }

  std::vector<SpikeTrain> out(weights.rows());
  std::vector<double> drive(n_grid);
  for (std::size_t i = 0; i < weights.rows(); ++i) {
    if (keep != nullptr && !(*keep)[i]) {
      continue;
    }
    std::fill(drive.begin(), drive.end(), 0.0);
    const auto w = weights.row(i);
    for (std::size_t e = 0; e < source.size(); ++e) {
      const double we = w[source[e]];
      const double* row = table.data() + e * n_grid;
      for (std::size_t k = 0; k < n_grid; ++k) {
        drive[k] += we * row[k];
      }
    }
    out[i] = fire_from_drive(drive, p, window);
  }
  return out;
}

std::optional<std::size_t> first_to_spike(std::span<const SpikeTrain> outputs) {
  std::optional<std::size_t> best;
  double best_t = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const auto t = outputs[i].first();
    if (t && (!best || *t < best_t)) {
      best = i;
      best_t = *t;
    }
  }
  return best;
}

ForwardResult forward(const Network& net, const EncodedSample& sample, const SimWindow& window,
                      std::span<const LayerMask> masks) {
  if (sample.spike_times.size() != net.topology.inputs()) {
    throw std::invalid_argument("forward: sample has " + std::to_string(sample.spike_times.size()) +
                                " channels, network expects " +
                                std::to_string(net.topology.inputs()));
  }
  const std::size_t depth = net.topology.depth();
  if (!masks.empty() && masks.size() != depth - 1) {
    throw std::invalid_argument("forward: need one mask per hidden layer");
  }

  ForwardResult res;
  res.spikes.reserve(depth + 1);
  auto& input = res.spikes.emplace_back(sample.spike_times.size());
  for (std::size_t j = 0; j < sample.spike_times.size(); ++j) {
    if (sample.spike_times[j]) {
      input[j] = SpikeTrain::single(*sample.spike_times[j]);
    }
  }

  for (std::size_t k = 0; k < depth; ++k) {
    const LayerMask* keep = nullptr;
    if (!masks.empty() && k + 1 < depth) {
      keep = &masks[k];
      if (keep->size() != net.topology.layer_sizes[k + 1]) {
        throw std::invalid_argument("forward: mask size does not match hidden layer");
      }
    }
    res.spikes.push_back(simulate_layer(net.weights[k], res.spikes[k], net.params, window, keep));
  }
  res.decision = first_to_spike(res.spikes.back());
  return res;
}

namespace {

constexpr std::array<char, 8> kMagic = {'F', 'I', 'L', 'T', 'S', 'N', 'N', '\0'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) {
    throw DataError("checkpoint: unexpected end of file");
  }
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(bytes[i]) << (8 * i);
  }
  return value;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

}  // namespace

void write_checkpoint(std::ostream& out, const Network& net) {
  net.validate();
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.topology.layer_sizes.size()));
  for (std::size_t n : net.topology.layer_sizes) put_le<std::uint64_t>(out, n);
  const auto& p = net.params;
  for (double v : {p.tau_m, p.tau_s, p.eps0, p.u_r, p.v_t, p.tau_q}) put_f64(out, v);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.init_scheme));
  put_le<std::uint64_t>(out, net.seed);
  for (const auto& w : net.weights) {
    for (double v : w.data()) put_f64(out, v);
  }
  if (!out) {
    throw std::runtime_error("checkpoint: write failed");
  }
}

Network read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw DataError("checkpoint: bad magic");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto n_layers = get_le<std::uint32_t>(in);
  if (n_layers < 2 || n_layers > 64) {
    throw DataError("checkpoint: implausible layer count " + std::to_string(n_layers));
  }
  Network net;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const auto n = get_le<std::uint64_t>(in);
    if (n == 0 || n > (1ULL << 24)) {
      throw DataError("checkpoint: implausible layer size " + std::to_string(n));
    }
    net.topology.layer_sizes.push_back(static_cast<std::size_t>(n));
  }
  auto& p = net.params;
  for (double* v : {&p.tau_m, &p.tau_s, &p.eps0, &p.u_r, &p.v_t, &p.tau_q}) *v = get_f64(in);
  const auto scheme = get_le<std::uint32_t>(in);
  if (scheme != 1 && scheme != 2) {
    throw DataError("checkpoint: unknown init scheme id " + std::to_string(scheme));
  }
  net.init_scheme = static_cast<InitScheme>(scheme);
  net.seed = get_le<std::uint64_t>(in);
  for (std::size_t k = 0; k < net.topology.depth(); ++k) {
    Matrix w(net.topology.layer_sizes[k + 1], net.topology.layer_sizes[k]);
    for (double& v : w.data()) v = get_f64(in);
    net.weights.push_back(std::move(w));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("checkpoint: trailing bytes after weight data");
  }
  try {
    net.params.validate();
    net.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const Network& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  }
  write_checkpoint(out, net);
}

Network load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("checkpoint: cannot open " + path.string());
  }
  return read_checkpoint(in);
}

}  // namespace filt_snn
