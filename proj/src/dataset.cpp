#include "filt_snn/dataset.hpp"

#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "filt_snn/errors.hpp"
#include "filt_snn/rng.hpp"

namespace filt_snn {

namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) {
    throw DataError(path.string() + ": truncated IDX header");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  return in;
}

void expect_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    throw DataError(path.string() + ": bad IDX magic " + std::to_string(got) + ", expected " +
                    std::to_string(want));
  }
}

}  // namespace

std::vector<std::array<std::uint8_t, kImagePixels>> load_idx_images(const std::filesystem::path& path) {
  auto in = open_binary(path);
  expect_magic(read_be32(in, path), kIdxImageMagic, path);
  const std::uint32_t count = read_be32(in, path);
  const std::uint32_t rows = read_be32(in, path);
  const std::uint32_t cols = read_be32(in, path);
  if (rows != 28 || cols != 28) {
    throw DataError(path.string() + ": expected 28x28 images, got " + std::to_string(rows) + "x" +
                    std::to_string(cols));
  }
  std::vector<std::array<std::uint8_t, kImagePixels>> images(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(images[i].data()), kImagePixels);
    if (!in) {
      throw DataError(path.string() + ": payload truncated at image " + std::to_string(i) + " of " +
                      std::to_string(count));
    }
  }
  return images;
}

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
  auto in = open_binary(path);
  expect_magic(read_be32(in, path), kIdxLabelMagic, path);
  const std::uint32_t count = read_be32(in, path);
  std::vector<std::uint8_t> labels(count);
  in.read(reinterpret_cast<char*>(labels.data()), count);
  if (static_cast<std::uint64_t>(in.gcount()) != count) {
    throw DataError(path.string() + ": payload truncated, expected " + std::to_string(count) +
                    " labels");
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    if (labels[i] > 9) {
      throw DataError(path.string() + ": label " + std::to_string(labels[i]) + " at index " +
                      std::to_string(i) + " exceeds 9");
    }
  }
  return labels;
}

void write_idx_images(const std::filesystem::path& path,
                      const std::vector<std::array<std::uint8_t, kImagePixels>>& images) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_be32(out, kIdxImageMagic);
  write_be32(out, static_cast<std::uint32_t>(images.size()));
  write_be32(out, 28);
  write_be32(out, 28);
  for (const auto& img : images) {
    out.write(reinterpret_cast<const char*>(img.data()), img.size());
  }
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_be32(out, kIdxLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), labels.size());
}

std::vector<RawImage> load_idx_dataset(const std::filesystem::path& images,
                                       const std::filesystem::path& labels) {
  const auto pixels = load_idx_images(images);
  const auto tags = load_idx_labels(labels);
  if (pixels.size() != tags.size()) {
    throw DataError("image/label count mismatch: " + std::to_string(pixels.size()) + " images in " +
                    images.string() + ", " + std::to_string(tags.size()) + " labels in " +
                    labels.string());
  }
  std::vector<RawImage> out(pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].pixels = pixels[i];
    out[i].label = tags[i];
  }
  return out;
}

std::vector<std::size_t> subset_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count >= n) {
    return idx;
  }
  // Partial Fisher-Yates.
  Rng rng(derive_seed(seed, 0x5b5e7));
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  return idx;
}

BatchPlan make_batches(std::size_t n_samples, std::size_t batch_size, std::size_t batches,
                       std::uint64_t seed) {
  if (batch_size == 0 || n_samples < batch_size) {
    throw std::invalid_argument("make_batches: need n_samples >= batch_size >= 1");
  }
  Rng rng(derive_seed(seed, 0xba7c4));
  BatchPlan plan(batches);
  for (auto& batch : plan) {
    batch.resize(batch_size);
    for (auto& i : batch) {
      i = static_cast<std::size_t>(rng.below(n_samples));
    }
  }
  return plan;
}

std::vector<EncodedSample> encode_all(const std::vector<RawImage>& images, const EncoderParams& params) {
  std::vector<EncodedSample> out;
  out.reserve(images.size());
  for (const auto& img : images) {
    out.push_back(encode_image(img.pixels, img.label, params));
  }
  return out;
}

}  // namespace filt_snn
