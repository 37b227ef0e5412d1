#include "bdnas/cost.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "bdnas/ops.hpp"
#include "bdnas/text.hpp"

namespace bdnas {

MBConvStageFlops mbconv_stage_flops(const OperatorSpec& op, std::pair<int, int> input_hw) {
  const double h = input_hw.first, w = input_hw.second;
  const double oh = static_cast<double>(conv_out_extent(input_hw.first, op.kernel, op.stride, op.kernel / 2));
  const double ow = static_cast<double>(conv_out_extent(input_hw.second, op.kernel, op.stride, op.kernel / 2));
  const double hidden = op.hidden_channels();
  MBConvStageFlops f;
  f.expand = h * w * op.in_channels * hidden;
  f.depthwise = oh * ow * hidden * op.kernel * op.kernel;
  f.project = oh * ow * hidden * op.out_channels;
  return f;
}

double flops_of(const OperatorSpec& op, std::pair<int, int> input_hw) {
  switch (op.kind) {
    case OpKind::Identity:
      return 0;
    case OpKind::MBConv:
      return mbconv_stage_flops(op, input_hw).total();
    case OpKind::Conv: {
      const double oh = static_cast<double>(conv_out_extent(input_hw.first, op.kernel, op.stride, op.kernel / 2));
      const double ow = static_cast<double>(conv_out_extent(input_hw.second, op.kernel, op.stride, op.kernel / 2));
      return oh * ow * op.in_channels * op.out_channels * op.kernel * op.kernel;
    }
  }
  return 0;
}

double stem_flops(const SuperNetSpec& spec) {
  return static_cast<double>(spec.height) * spec.width * spec.in_channels * spec.stem_channels * 9;
}

double head_flops(const SuperNetSpec& spec) {
  const auto hw = spec.block_input_hw().back();
  const double pointwise = static_cast<double>(hw.first) * hw.second *
                           spec.blocks.back().out_channels * spec.head_channels;
  return pointwise + static_cast<double>(spec.head_channels) * spec.num_classes;
}

std::string to_string(CostKind kind) {
  return kind == CostKind::Flops ? "flops" : "latency_proxy";
}

CostKind cost_kind_from_string(const std::string& name) {
  if (name == "flops") return CostKind::Flops;
  if (name == "latency_proxy") return CostKind::LatencyProxy;
  throw ConfigError("unknown cost kind '" + name + "' (expected flops or latency_proxy)");
}

double CostTable::path_total(const std::vector<std::size_t>& choice) const {
  if (choice.size() != per_block.size()) throw std::logic_error("path length does not match cost table");
  double total = fixed;
  for (std::size_t l = 0; l < choice.size(); ++l) total += at(l, choice[l]);
  return total;
}

CostTable build_flops_table(const SuperNetSpec& spec, const std::vector<ChoiceBlock>& blocks) {
  const auto hw = spec.block_input_hw();
  CostTable t;
  t.kind = CostKind::Flops;
  t.fixed = stem_flops(spec) + head_flops(spec);
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    std::vector<double> row;
    for (const auto& c : blocks[l].operators) row.push_back(flops_of(c.spec, hw[l]));
    t.per_block.push_back(std::move(row));
  }
  return t;
}

LatencyTable LatencyTable::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open latency table " + path.string());
  LatencyTable table;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "block_index,operator_name,cost") {
        throw ConfigError(path.string() + ": expected header block_index,operator_name,cost");
      }
      header_seen = true;
      continue;
    }
    auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    }
    try {
      const auto block = static_cast<std::size_t>(std::stoull(fields[0]));
      const double cost = parse_double(fields[2]);
      if (cost < 0) throw ConfigError("negative cost");
      table.set(block, fields[1], cost);
    } catch (const std::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header_seen) throw ConfigError(path.string() + ": empty latency table");
  return table;
}

void LatencyTable::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "block_index,operator_name,cost\n";
  for (const auto& [key, cost] : entries_) {
    out << key.first << ',' << key.second << ',' << format_double(cost) << '\n';
  }
}

void LatencyTable::set(std::size_t block, const std::string& op, double cost) {
  entries_[{block, op}] = cost;
}

const double* LatencyTable::find(std::size_t block, const std::string& op) const {
  auto it = entries_.find({block, op});
  return it == entries_.end() ? nullptr : &it->second;
}

double measure_latency(const OperatorSpec& op, std::pair<int, int> input_hw, int repeats) {
  if (op.kind == OpKind::Identity) return 0;
  repeats = std::max(repeats, 31);
  RandomStream rng(0, "latency/" + op.name());
  ParamSet params = init_operator_params(op, rng);
  params.set_requires_grad(false);
  const Shape shape{1, static_cast<std::size_t>(op.in_channels),
                    static_cast<std::size_t>(input_hw.first), static_cast<std::size_t>(input_hw.second)};
  std::vector<Real> xv(shape.numel());
  for (auto& v : xv) v = rng.normal();
  const Tensor x = Tensor::from(shape, std::move(xv));

  (void)apply_operator(op, params, x);  // warm-up
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(repeats));
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Tensor y = apply_operator(op, params, x);
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2),
                   samples.end());
  return samples[samples.size() / 2];
}

double latency_proxy_of(const OperatorSpec& op, std::pair<int, int> input_hw,
                        const LatencyTable* table, std::size_t block_index, bool allow_measure) {
  if (table) {
    if (const double* v = table->find(block_index, op.name())) return *v;
  }
  if (op.kind == OpKind::Identity) return 0;
  if (allow_measure) return measure_latency(op, input_hw);
  throw ConfigError("latency table has no entry for block " + std::to_string(block_index) +
                    " operator " + op.name());
}

CostTable build_latency_table(const SuperNetSpec& spec, const std::vector<ChoiceBlock>& blocks,
                              const LatencyTable* table, bool allow_measure) {
  const auto hw = spec.block_input_hw();
  CostTable t;
  t.kind = CostKind::LatencyProxy;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    std::vector<double> row;
    for (const auto& c : blocks[l].operators) {
      row.push_back(latency_proxy_of(c.spec, hw[l], table, l, allow_measure));
    }
    t.per_block.push_back(std::move(row));
  }
  return t;
}

LatencyTable measure_latency_table(const SuperNetSpec& spec, const std::vector<ChoiceBlock>& blocks,
                                   int repeats) {
  const auto hw = spec.block_input_hw();
  LatencyTable table;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    for (const auto& c : blocks[l].operators) {
      table.set(l, c.spec.name(), measure_latency(c.spec, hw[l], repeats));
    }
  }
  return table;
}

}  // namespace bdnas
