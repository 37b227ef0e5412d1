#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bdnas/space.hpp"

namespace bdnas {

// All FLOPs figures are multiply-accumulate counts (one MAC = one FLOP here,
// not two). Affine, activation, pooling and residual adds are not counted.

/// MACs of expand-pointwise + depthwise + project-pointwise (MBConv), of the
/// single conv (Conv), or 0 (Identity), for an input of `input_hw`.
double flops_of(const OperatorSpec& op, std::pair<int, int> input_hw);

struct MBConvStageFlops {
  double expand = 0;
  double depthwise = 0;
  double project = 0;
  double total() const { return expand + depthwise + project; }
};
MBConvStageFlops mbconv_stage_flops(const OperatorSpec& op, std::pair<int, int> input_hw);

double stem_flops(const SuperNetSpec& spec);
double head_flops(const SuperNetSpec& spec);

enum class CostKind { Flops, LatencyProxy };
std::string to_string(CostKind kind);
CostKind cost_kind_from_string(const std::string& name);

/// Per (block, operator) cost for the latency term, plus the path-independent
/// cost of stem and head.
struct CostTable {
  CostKind kind = CostKind::Flops;
  std::vector<std::vector<double>> per_block;
  double fixed = 0;

  double at(std::size_t block, std::size_t op) const { return per_block.at(block).at(op); }
  /// fixed + Σ_l cost(l, path[l]).
  double path_total(const std::vector<std::size_t>& choice) const;
};

CostTable build_flops_table(const SuperNetSpec& spec, const std::vector<ChoiceBlock>& blocks);

/// Latency proxies keyed by (block index, operator name), loaded from CSV
/// with header `block_index,operator_name,cost`.
class LatencyTable {
 public:
  static LatencyTable load_csv(const std::filesystem::path& path);
  void save_csv(const std::filesystem::path& path) const;

  void set(std::size_t block, const std::string& op, double cost);
  const double* find(std::size_t block, const std::string& op) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::pair<std::size_t, std::string>, double> entries_;
};

/// Median wall-clock microseconds of `repeats` single-image forward passes.
double measure_latency(const OperatorSpec& op, std::pair<int, int> input_hw, int repeats = 31);

/// Table lookup first; Identity is 0 by convention; otherwise measured when
/// `allow_measure`, else ConfigError.
double latency_proxy_of(const OperatorSpec& op, std::pair<int, int> input_hw,
                        const LatencyTable* table, std::size_t block_index, bool allow_measure);

CostTable build_latency_table(const SuperNetSpec& spec, const std::vector<ChoiceBlock>& blocks,
                              const LatencyTable* table, bool allow_measure);

/// Measures every operator of the space (stem and head excluded).
LatencyTable measure_latency_table(const SuperNetSpec& spec, const std::vector<ChoiceBlock>& blocks,
                                   int repeats = 31);

}  // namespace bdnas
