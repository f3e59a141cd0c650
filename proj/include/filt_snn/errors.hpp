#pragma once

#include <stdexcept>
#include <string>

namespace filt_snn {

/// Malformed or inconsistent input data (IDX files, checkpoints, configs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace filt_snn
