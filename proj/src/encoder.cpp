#include "filt_snn/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace filt_snn {

void EncoderParams::validate() const {
  if (!(horizon > 0.0) || !(sigma > 0.0) || !(pixel_threshold >= 0.0 && pixel_threshold <= 1.0)) {
    throw std::invalid_argument("encoder params: require horizon > 0, sigma > 0, 0 <= p_t <= 1");
  }
}

double EncoderParams::max_delay() const {
  const double d = pixel_threshold - 1.0;
  return horizon * (1.0 - std::exp(-d * d / (2.0 * sigma * sigma)));
}

std::size_t EncodedSample::spiking_channels() const {
  return static_cast<std::size_t>(
      std::count_if(spike_times.begin(), spike_times.end(), [](const auto& t) { return t.has_value(); }));
}

std::optional<double> encode_pixel(double p, const EncoderParams& params) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("encode_pixel: pixel value " + std::to_string(p) +
                                " outside [0, 1]");
  }
  if (p < params.pixel_threshold) {
    return std::nullopt;
  }
  const double d = p - 1.0;
  return params.horizon * (1.0 - std::exp(-d * d / (2.0 * params.sigma * params.sigma)));
}

EncodedSample encode_image(std::span<const std::uint8_t> pixels, std::uint8_t label,
                           const EncoderParams& params) {
  if (pixels.size() != kImagePixels) {
    throw std::invalid_argument("encode_image: expected 784 pixels, got " +
                                std::to_string(pixels.size()));
  }
  EncodedSample out;
  out.label = label;
  out.spike_times.reserve(pixels.size());
  for (std::uint8_t v : pixels) {
    out.spike_times.push_back(encode_pixel(static_cast<double>(v) / 255.0, params));
  }
  return out;
}

}  // namespace filt_snn
