#include "bdnas/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace bdnas {

std::string to_string(DataSource source) {
  return source == DataSource::Synthetic ? "synthetic" : "cifar10-binary";
}

void DatasetHandle::assign_splits(const SplitFractions& f, std::uint64_t seed) {
  if (f.weight_train < 0 || f.alpha_train < 0 || f.eval < 0 ||
      std::abs(f.weight_train + f.alpha_train + f.eval - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  }
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  RandomStream rng(seed, "data/splits");
  shuffle_in_place(order, rng);
  const auto n = static_cast<double>(order.size());
  const auto n_weight = static_cast<std::size_t>(std::llround(f.weight_train * n));
  const auto n_alpha = std::min(order.size() - n_weight, static_cast<std::size_t>(std::llround(f.alpha_train * n)));
  weight_train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_weight));
  alpha_train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_weight),
                     order.begin() + static_cast<std::ptrdiff_t>(n_weight + n_alpha));
  eval.assign(order.begin() + static_cast<std::ptrdiff_t>(n_weight + n_alpha), order.end());
}

std::vector<std::vector<Real>> synthetic_prototypes(std::uint64_t seed, const SyntheticOptions& o) {
  if (o.classes < 2) throw std::invalid_argument("synthetic data needs at least 2 classes");
  if (o.channels < 1 || o.height < 1 || o.width < 1) throw std::invalid_argument("bad image shape");
  RandomStream rng(seed, "data/prototypes");
  const std::size_t plane = static_cast<std::size_t>(o.height) * static_cast<std::size_t>(o.width);
  std::vector<std::vector<Real>> protos;
  for (int c = 0; c < o.classes; ++c) {
    std::vector<Real> p(plane * static_cast<std::size_t>(o.channels), Real{0});
    for (int b = 0; b < o.blobs_per_class; ++b) {
      const double cy = rng.uniform(0, o.height), cx = rng.uniform(0, o.width);
      const double sigma = rng.uniform(o.height / 8.0, o.height / 4.0) + 0.5;
      std::vector<double> amp(static_cast<std::size_t>(o.channels));
      for (auto& a : amp) a = rng.normal();
      for (int y = 0; y < o.height; ++y) {
        for (int x = 0; x < o.width; ++x) {
          const double r2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          const double bump = std::exp(-r2 / (2 * sigma * sigma));
          for (int ch = 0; ch < o.channels; ++ch) {
            p[static_cast<std::size_t>(ch) * plane + static_cast<std::size_t>(y * o.width + x)] +=
                amp[static_cast<std::size_t>(ch)] * bump;
          }
        }
      }
    }
    double ss = 0;
    for (Real v : p) ss += v * v;
    const double rms = std::sqrt(ss / static_cast<double>(p.size()));
    if (rms > 0) {
      for (auto& v : p) v /= rms;
    }
    protos.push_back(std::move(p));
  }
  return protos;
}

DatasetHandle gen_synthetic(std::uint64_t seed, const SyntheticOptions& o) {
  const auto protos = synthetic_prototypes(seed, o);
  DatasetHandle d;
  d.source = DataSource::Synthetic;
  d.channels = o.channels;
  d.height = o.height;
  d.width = o.width;
  d.num_classes = o.classes;
  const std::size_t numel = d.image_numel();
  d.images.resize(o.n * numel);
  d.labels.resize(o.n);
  RandomStream rng(seed, "data/samples");
  for (std::size_t i = 0; i < o.n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(o.classes));
    d.labels[i] = label;
    int dy = 0, dx = 0;
    if (o.jitter > 0) {
      dy = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * o.jitter + 1))) - o.jitter;
      dx = static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * o.jitter + 1))) - o.jitter;
    }
    const auto& p = protos[static_cast<std::size_t>(label)];
    Real* out = d.images.data() + i * numel;
    for (int ch = 0; ch < o.channels; ++ch) {
      for (int y = 0; y < o.height; ++y) {
        const int sy = ((y - dy) % o.height + o.height) % o.height;
        for (int x = 0; x < o.width; ++x) {
          const int sx = ((x - dx) % o.width + o.width) % o.width;
          const std::size_t src = (static_cast<std::size_t>(ch) * o.height + sy) * o.width + sx;
          const std::size_t dst = (static_cast<std::size_t>(ch) * o.height + y) * o.width + x;
          out[dst] = p[src] + (o.noise > 0 ? o.noise * rng.normal() : 0.0);
        }
      }
    }
  }
  return d;
}

DatasetHandle load_cifar10_binary(const std::vector<std::filesystem::path>& files,
                                  const CifarOptions& options) {
  DatasetHandle d;
  d.source = DataSource::Cifar10Binary;
  d.channels = 3;
  d.height = 32;
  d.width = 32;
  d.num_classes = 10;
  const std::size_t numel = 3072;
  std::vector<unsigned char> record(kCifarRecordBytes);
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw DataFormatError("cannot open " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes % kCifarRecordBytes != 0) {
      throw DataFormatError(path.string() + ": truncated record at byte offset " +
                            std::to_string(bytes - bytes % kCifarRecordBytes) + " (file length " +
                            std::to_string(bytes) + " is not a multiple of 3073)");
    }
    in.seekg(0);
    for (std::size_t r = 0; r < bytes / kCifarRecordBytes; ++r) {
      if (options.max_examples && d.labels.size() >= options.max_examples) break;
      in.read(reinterpret_cast<char*>(record.data()), static_cast<std::streamsize>(kCifarRecordBytes));
      if (!in) throw DataFormatError(path.string() + ": read failed at record " + std::to_string(r));
      if (record[0] > 9) {
        throw DataFormatError(path.string() + ": label " + std::to_string(record[0]) +
                              " out of range at byte offset " + std::to_string(r * kCifarRecordBytes));
      }
      d.labels.push_back(record[0]);
      for (std::size_t i = 0; i < numel; ++i) d.images.push_back(record[1 + i] / 255.0);
    }
  }
  if (options.normalize && !d.labels.empty()) {
    const std::size_t plane = 1024;
    d.channel_mean.assign(3, 0.0);
    d.channel_std.assign(3, 0.0);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      double sum = 0, sq = 0;
      for (std::size_t i = 0; i < d.labels.size(); ++i) {
        for (std::size_t j = 0; j < plane; ++j) {
          const double v = d.images[i * numel + ch * plane + j];
          sum += v;
          sq += v * v;
        }
      }
      const double count = static_cast<double>(d.labels.size() * plane);
      const double mean = sum / count;
      const double sd = std::sqrt(std::max(sq / count - mean * mean, 1e-12));
      d.channel_mean[ch] = mean;
      d.channel_std[ch] = sd;
      for (std::size_t i = 0; i < d.labels.size(); ++i) {
        for (std::size_t j = 0; j < plane; ++j) {
          auto& v = d.images[i * numel + ch * plane + j];
          v = (v - mean) / sd;
        }
      }
    }
  }
  return d;
}

Batch make_batch(const DatasetHandle& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("empty batch");
  const std::size_t numel = data.image_numel();
  std::vector<Real> x(indices.size() * numel);
  std::vector<int> y(indices.size());
  for (std::size_t b = 0; b < indices.size(); ++b) {
    auto img = data.image(indices[b]);
    std::copy(img.begin(), img.end(), x.begin() + static_cast<std::ptrdiff_t>(b * numel));
    y[b] = data.labels.at(indices[b]);
  }
  Shape shape{indices.size(), static_cast<std::size_t>(data.channels),
              static_cast<std::size_t>(data.height), static_cast<std::size_t>(data.width)};
  return {Tensor::from(shape, std::move(x)), std::move(y)};
}

BatchCursor::BatchCursor(std::vector<std::size_t> indices, std::size_t batch_size, RandomStream rng)
    : order_(std::move(indices)), batch_size_(batch_size), rng_(std::move(rng)) {
  if (order_.empty()) throw std::invalid_argument("batch cursor over an empty split");
  if (batch_size_ == 0) throw std::invalid_argument("batch size must be >= 1");
  batch_size_ = std::min(batch_size_, order_.size());
  reshuffle();
}

void BatchCursor::reshuffle() {
  shuffle_in_place(order_, rng_);
  pos_ = 0;
}

std::size_t BatchCursor::batches_per_epoch() const { return order_.size() / batch_size_; }

std::vector<std::size_t> BatchCursor::next() {
  if (pos_ + batch_size_ > order_.size()) {
    ++epoch_;
    reshuffle();
  }
  std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                               order_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch_size_));
  pos_ += batch_size_;
  return out;
}

}  // namespace bdnas
