#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "filt_snn/encoder.hpp"

namespace filt_snn {

struct RawImage {
  std::array<std::uint8_t, kImagePixels> pixels{};
  std::uint8_t label = 0;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// IDX3 image file with 28x28 images. Throws DataError on a bad header or a
/// truncated payload.
std::vector<std::array<std::uint8_t, kImagePixels>> load_idx_images(const std::filesystem::path& path);

/// IDX1 label file; every label must be <= 9.
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);

void write_idx_images(const std::filesystem::path& path,
                      const std::vector<std::array<std::uint8_t, kImagePixels>>& images);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

/// Pairs an image file with a label file, preserving order. Count mismatch is a DataError.
std::vector<RawImage> load_idx_dataset(const std::filesystem::path& images,
                                       const std::filesystem::path& labels);

/// `count` distinct indices from [0, n), chosen by seed. count >= n keeps everything in order.
std::vector<std::size_t> subset_indices(std::size_t n, std::size_t count, std::uint64_t seed);

/// Batches of indices drawn uniformly with replacement from [0, n_samples).
using BatchPlan = std::vector<std::vector<std::size_t>>;
BatchPlan make_batches(std::size_t n_samples, std::size_t batch_size, std::size_t batches,
                       std::uint64_t seed);

std::vector<EncodedSample> encode_all(const std::vector<RawImage>& images, const EncoderParams& params);

}  // namespace filt_snn
