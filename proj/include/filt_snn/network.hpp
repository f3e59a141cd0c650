#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "filt_snn/encoder.hpp"
#include "filt_snn/matrix.hpp"
#include "filt_snn/neuron.hpp"

namespace filt_snn {

/// Neuron counts per layer, input first, classes last.
struct Topology {
  std::vector<std::size_t> layer_sizes;

  void validate() const;
  std::size_t depth() const { return layer_sizes.size() - 1; }  // number of weight layers
  std::size_t inputs() const { return layer_sizes.front(); }
  std::size_t classes() const { return layer_sizes.back(); }

  friend bool operator==(const Topology&, const Topology&) = default;
};

enum class InitScheme : std::uint32_t {
  /// U[0, 2c] with c = V_t / (f * fan_in * psp_peak): a neuron seeing spikes on
  /// a fraction f of its inputs gets an expected peak drive near threshold.
  /// f = kInputActiveFraction for the first layer, kHiddenActiveFraction after.
  kScaledUniform = 1,
  kZero = 2,
};

std::string_view to_string(InitScheme s);
InitScheme init_scheme_from_string(std::string_view s);

/// Trainable state. weights[k] connects layer k to layer k+1 and has shape
/// layer_sizes[k+1] x layer_sizes[k] (row = postsynaptic neuron).
struct Network {
  Topology topology;
  std::vector<Matrix> weights;
  KernelParams params;
  InitScheme init_scheme = InitScheme::kScaledUniform;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const Network&, const Network&) = default;
};

/// Share of MNIST pixels at or above the encoder threshold (0.132 measured).
inline constexpr double kInputActiveFraction = 0.13;
/// Assumed share of spiking presynaptic neurons for layers past the first.
inline constexpr double kHiddenActiveFraction = 0.6;

/// Mean of the scaled-uniform distribution for a layer with the given fan-in.
double scaled_uniform_center(std::size_t fan_in, double active_fraction, const KernelParams& p);

Network init_weights(const Topology& topology, std::uint64_t seed,
                     InitScheme scheme = InitScheme::kScaledUniform,
                     const KernelParams& params = {});

/// Keep-flags for one hidden layer; false silences the neuron.
using LayerMask = std::vector<bool>;

struct ForwardResult {
  std::vector<std::vector<SpikeTrain>> spikes;  // layers 0..L
  std::optional<std::size_t> decision;
};

/// Layer-by-layer simulation of one sample. `masks` is empty or holds one mask
/// per hidden layer. The decision is the output neuron with the earliest first
/// spike, lowest index on ties, and empty when the output layer is silent.
/// Throws std::invalid_argument on channel-count or mask-shape mismatch.
ForwardResult forward(const Network& net, const EncodedSample& sample, const SimWindow& window,
                      std::span<const LayerMask> masks = {});

/// Spike trains of all postsynaptic neurons driven by `pre` through `weights`.
std::vector<SpikeTrain> simulate_layer(const Matrix& weights, std::span<const SpikeTrain> pre,
                                       const KernelParams& p, const SimWindow& window,
                                       const LayerMask* keep = nullptr);

std::optional<std::size_t> first_to_spike(std::span<const SpikeTrain> outputs);

// Checkpoints: little-endian binary, magic "FILTSNN\0", format version,
// topology, kernel params, init scheme and seed, then each weight matrix as
// row-major float64.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const Network& net);
Network read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Network& net);
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace filt_snn
