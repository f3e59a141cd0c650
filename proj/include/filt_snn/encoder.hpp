#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace filt_snn {

/// Gaussian latency code parameters: horizon (ms), sensitivity breadth and
/// pixel threshold (both on normalized [0,1] pixels).
struct EncoderParams {
  double horizon = 10.0;
  double sigma = 0.5;
  double pixel_threshold = 0.5;

  void validate() const;
  /// Largest delay the encoder can produce (reached at the pixel threshold).
  double max_delay() const;
};

struct EncodedSample {
  std::vector<std::optional<double>> spike_times;
  std::uint8_t label = 0;

  std::size_t spiking_channels() const;
};

/// First-spike time for one normalized pixel; empty below the threshold.
/// Throws std::invalid_argument for p outside [0,1].
std::optional<double> encode_pixel(double p, const EncoderParams& params);

/// Normalizes bytes by 1/255 and encodes each channel, row-major.
/// Throws std::invalid_argument unless exactly 784 pixels are given.
EncodedSample encode_image(std::span<const std::uint8_t> pixels, std::uint8_t label,
                           const EncoderParams& params);

inline constexpr std::size_t kImagePixels = 28 * 28;

}  // namespace filt_snn
