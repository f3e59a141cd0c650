#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "filt_snn/encoder.hpp"
#include "filt_snn/network.hpp"
#include "filt_snn/plasticity.hpp"

namespace filt_snn {

/// Location and subsetting of the IDX files. A subset size of 0 keeps every image.
struct DataPaths {
  std::filesystem::path dir = "data/mnist";
  std::string train_images = "train-images-idx3-ubyte";
  std::string train_labels = "train-labels-idx1-ubyte";
  std::string test_images = "t10k-images-idx3-ubyte";
  std::string test_labels = "t10k-labels-idx1-ubyte";
  std::size_t train_subset = 0;
  std::size_t test_subset = 0;
  std::uint64_t subset_seed = 2019;
};

/// Everything a training run depends on.
struct RunConfig {
  Topology topology{{784, 100, 10}};
  TrainConfig train{};
  EncoderParams encoder{};
  KernelParams kernel{};
  InitScheme init = InitScheme::kScaledUniform;
  DataPaths data{};
  std::filesystem::path output_dir = "runs/train";

  void validate() const;
};

/// Malformed or inconsistent configuration. what() starts with "source:line:col:".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, std::size_t column, const std::string& message);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Parses a JSON document; absent keys keep their defaults and unknown keys
/// are rejected.
RunConfig parse_run_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Fully resolved document (every key present); parses back to the same config.
std::string dump_run_config(const RunConfig& cfg);

/// Environment variable that, when set and non-empty, replaces data.dir.
inline constexpr const char* kDataDirEnv = "FILT_SNN_DATA";

void apply_data_dir_env(RunConfig& cfg);

}  // namespace filt_snn
