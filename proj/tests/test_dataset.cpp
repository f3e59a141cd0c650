#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "filt_snn/dataset.hpp"
#include "filt_snn/errors.hpp"

using namespace filt_snn;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = FILT_SNN_FIXTURES;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "filt_snn_test_dataset";
  fs::create_directories(dir);
  return dir / name;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> header(std::uint32_t magic, std::vector<std::uint32_t> dims) {
  std::vector<unsigned char> b;
  auto put = [&](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>(v >> s));
  };
  put(magic);
  for (auto d : dims) put(d);
  return b;
}

}  // namespace

TEST_CASE("mini fixture loads") {
  const auto train = load_idx_dataset(kFixtures / "mini/train-images-idx3-ubyte", kFixtures / "mini/train-labels-idx1-ubyte");
  const auto test = load_idx_dataset(kFixtures / "mini/t10k-images-idx3-ubyte", kFixtures / "mini/t10k-labels-idx1-ubyte");
  CHECK(train.size() == 60);
  CHECK(test.size() == 30);
  std::set<int> labels;
  for (const auto& img : train) {
    CHECK(img.label <= 9);
    labels.insert(img.label);
    CHECK(std::any_of(img.pixels.begin(), img.pixels.end(), [](auto v) { return v > 128; }));
  }
  CHECK(labels.size() >= 8);
}

TEST_CASE("idx round trip") {
  std::vector<std::array<std::uint8_t, kImagePixels>> images(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t p = 0; p < kImagePixels; ++p) images[i][p] = static_cast<std::uint8_t>((i * 31 + p) % 256);
  const std::vector<std::uint8_t> labels{4, 0, 9};
  write_idx_images(scratch("rt-images"), images);
  write_idx_labels(scratch("rt-labels"), labels);
  CHECK(load_idx_images(scratch("rt-images")) == images);
  CHECK(load_idx_labels(scratch("rt-labels")) == labels);
}

TEST_CASE("malformed idx files are data errors") {
  SUBCASE("missing") { CHECK_THROWS_AS(load_idx_images(scratch("does-not-exist")), DataError); }
  SUBCASE("bad magic") {
    auto b = header(0x00000801, {1, 28, 28});
    b.resize(b.size() + kImagePixels);
    write_bytes(scratch("bad-magic"), b);
    CHECK_THROWS_AS(load_idx_images(scratch("bad-magic")), DataError);
  }
  SUBCASE("wrong image size") {
    auto b = header(kIdxImageMagic, {1, 14, 14});
    b.resize(b.size() + 196);
    write_bytes(scratch("small"), b);
    CHECK_THROWS_AS(load_idx_images(scratch("small")), DataError);
  }
  SUBCASE("truncated payload") {
    auto b = header(kIdxImageMagic, {2, 28, 28});
    b.resize(b.size() + kImagePixels + 10);
    write_bytes(scratch("trunc"), b);
    CHECK_THROWS_AS(load_idx_images(scratch("trunc")), DataError);
  }
  SUBCASE("truncated header") {
    write_bytes(scratch("hdr"), {0, 0, 8});
    CHECK_THROWS_AS(load_idx_labels(scratch("hdr")), DataError);
  }
  SUBCASE("label out of range") {
    auto b = header(kIdxLabelMagic, {2});
    b.push_back(3);
    b.push_back(10);
    write_bytes(scratch("lab"), b);
    CHECK_THROWS_AS(load_idx_labels(scratch("lab")), DataError);
  }
  SUBCASE("count mismatch") {
    write_idx_labels(scratch("one-label"), {1});
    CHECK_THROWS_AS(load_idx_dataset(kFixtures / "mini/t10k-images-idx3-ubyte", scratch("one-label")), DataError);
  }
}

TEST_CASE("subset indices") {
  const auto a = subset_indices(1000, 200, 5);
  CHECK(a.size() == 200);
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 200);
  CHECK(*std::max_element(a.begin(), a.end()) < 1000);
  CHECK(subset_indices(1000, 200, 5) == a);
  CHECK(subset_indices(1000, 200, 6) != a);
  const auto all = subset_indices(10, 50, 1);
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}

TEST_CASE("batch plan") {
  const auto plan = make_batches(60, 20, 7, 3);
  CHECK(plan.size() == 7);
  for (const auto& b : plan) {
    CHECK(b.size() == 20);
    for (auto i : b) CHECK(i < 60);
  }
  CHECK(make_batches(60, 20, 7, 3) == plan);
  CHECK(make_batches(60, 20, 7, 4) != plan);
  CHECK(make_batches(60, 20, 0, 3).empty());
}

TEST_CASE("encoded fixture stays within the encoder bound") {
  const auto imgs = load_idx_dataset(kFixtures / "mini/t10k-images-idx3-ubyte", kFixtures / "mini/t10k-labels-idx1-ubyte");
  const EncoderParams p;
  const auto enc = encode_all(imgs, p);
  REQUIRE(enc.size() == imgs.size());
  for (std::size_t i = 0; i < enc.size(); ++i) {
    CHECK(enc[i].label == imgs[i].label);
    CHECK(enc[i].spiking_channels() > 0);
    for (const auto& t : enc[i].spike_times) {
      if (t) {
        CHECK(*t >= 0.0);
        CHECK(*t <= p.max_delay());
      }
    }
  }
  const auto zero = load_idx_dataset(kFixtures / "zero-images-idx3-ubyte", kFixtures / "zero-labels-idx1-ubyte");
  CHECK(encode_all(zero, p)[0].spiking_channels() == 0);
}
