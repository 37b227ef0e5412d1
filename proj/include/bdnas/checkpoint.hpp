#pragma once

#include <filesystem>
#include <stdexcept>

#include "bdnas/optim.hpp"

namespace bdnas {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary layout: the 6 magic bytes "BDNAS1", then one record per tensor until
// end of file. Each record is
//   u64 name length | name bytes | u64 rank | u64 dims[rank] | f64 values[numel]
// with every integer and float little-endian. Optimizer state is not stored.
void save_checkpoint(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_checkpoint(const std::filesystem::path& path);

/// Copies values from `src` into the same-named tensors of `dst`. Every tensor
/// in `dst` must be present in `src` with an identical shape.
void restore_values(ParamSet& dst, const ParamSet& src);

}  // namespace bdnas
