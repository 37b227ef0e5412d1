#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdnas/random.hpp"
#include "bdnas/tensor.hpp"

namespace bdnas {

class DataFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DataSource { Synthetic, Cifar10Binary };
std::string to_string(DataSource source);

struct SplitFractions {
  double weight_train = 0.6;
  double alpha_train = 0.2;
  double eval = 0.2;
};

/// In-memory image classification set with disjoint, exhaustive index splits:
/// weight_train feeds network weights, alpha_train feeds architecture
/// parameters, eval is held out.
struct DatasetHandle {
  DataSource source = DataSource::Synthetic;
  int channels = 0;
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<Real> images;  // N × C × H × W, row-major
  std::vector<int> labels;
  std::vector<std::size_t> weight_train;
  std::vector<std::size_t> alpha_train;
  std::vector<std::size_t> eval;
  // Per-channel normalization applied at load time (empty when none).
  std::vector<double> channel_mean;
  std::vector<double> channel_std;

  std::size_t size() const { return labels.size(); }
  std::size_t image_numel() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  std::span<const Real> image(std::size_t i) const {
    return std::span<const Real>(images).subspan(i * image_numel(), image_numel());
  }
  /// Seeded random partition. Throws std::invalid_argument on fractions that
  /// are negative or do not sum to 1.
  void assign_splits(const SplitFractions& fractions, std::uint64_t seed);
};

struct SyntheticOptions {
  std::size_t n = 2000;
  int channels = 3;
  int height = 16;
  int width = 16;
  int classes = 4;
  /// Standard deviation of the additive per-pixel Gaussian noise.
  double noise = 1.0;
  int blobs_per_class = 3;
  /// Maximum circular shift in pixels applied per sample (0 disables).
  int jitter = 0;
};

/// Class-conditional images: each class owns a prototype made of Gaussian
/// blobs (unit RMS); samples are prototype + noise, optionally shifted.
/// Labels cycle 0..classes-1. Deterministic in (seed, options).
DatasetHandle gen_synthetic(std::uint64_t seed, const SyntheticOptions& options);

/// The class prototypes gen_synthetic draws for (seed, options).
std::vector<std::vector<Real>> synthetic_prototypes(std::uint64_t seed, const SyntheticOptions& options);

constexpr std::size_t kCifarRecordBytes = 3073;

struct CifarOptions {
  bool normalize = true;
  /// Keep only the first `max_examples` records (0 keeps all).
  std::size_t max_examples = 0;
};

/// Reads CIFAR-10 binary batches: each record is a label byte (0-9) then
/// 1024 R, 1024 G, 1024 B bytes of a row-major 32×32 image. Pixels are scaled
/// to [0, 1] and, when requested, normalized per channel.
DatasetHandle load_cifar10_binary(const std::vector<std::filesystem::path>& files,
                                  const CifarOptions& options = {});

struct Batch {
  Tensor x;
  std::vector<int> labels;
};

Batch make_batch(const DatasetHandle& data, std::span<const std::size_t> indices);

/// Endless minibatch iterator over one split; reshuffles from its own stream
/// each time the split is exhausted.
class BatchCursor {
 public:
  BatchCursor(std::vector<std::size_t> indices, std::size_t batch_size, RandomStream rng);

  std::vector<std::size_t> next();
  std::size_t epoch() const { return epoch_; }
  std::size_t batches_per_epoch() const;

 private:
  void reshuffle();

  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  RandomStream rng_;
  std::size_t pos_ = 0;
  std::size_t epoch_ = 0;
};

}  // namespace bdnas
