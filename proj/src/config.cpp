#include "bdnas/config.hpp"

#include <fstream>
#include <set>

#include "bdnas/random.hpp"

namespace bdnas {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ConfigError("not a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError("not a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError("not an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_integer() && !it->is_number_unsigned()) throw ConfigError("must be non-negative");
      }
    }
    out = it->get<T>();
  } catch (const std::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

SearchConfig parse_search(const json& j, SearchConfig s, const std::string& where) {
  check_keys(j, {"s_max", "phase1_steps", "phase2_steps", "th_p", "beta", "lr_w", "momentum_w", "lr_alpha",
                 "adam_beta1", "adam_beta2", "adam_eps", "batch_size", "seed", "strategy", "cost_kind", "upstream"},
             where);
  read(j, "s_max", s.s_max, where);
  read(j, "phase1_steps", s.phase1_steps, where);
  read(j, "phase2_steps", s.phase2_steps, where);
  read(j, "th_p", s.th_p, where);
  read(j, "beta", s.beta, where);
  read(j, "lr_w", s.lr_w, where);
  read(j, "momentum_w", s.momentum_w, where);
  read(j, "lr_alpha", s.lr_alpha, where);
  read(j, "adam_beta1", s.adam_beta1, where);
  read(j, "adam_beta2", s.adam_beta2, where);
  read(j, "adam_eps", s.adam_eps, where);
  read(j, "batch_size", s.batch_size, where);
  read(j, "seed", s.seed, where);
  std::string name;
  if (j.contains("strategy")) {
    read(j, "strategy", name, where);
    s.strategy = strategy_from_string(name);
  }
  if (j.contains("cost_kind")) {
    read(j, "cost_kind", name, where);
    s.cost_kind = cost_kind_from_string(name);
  }
  if (j.contains("upstream")) {
    read(j, "upstream", name, where);
    s.upstream = upstream_mode_from_string(name);
  }
  return s;
}

json search_to_json(const SearchConfig& s) {
  return {{"s_max", s.s_max},           {"phase1_steps", s.phase1_steps},
          {"phase2_steps", s.phase2_steps}, {"th_p", s.th_p},
          {"beta", s.beta},             {"lr_w", s.lr_w},
          {"momentum_w", s.momentum_w}, {"lr_alpha", s.lr_alpha},
          {"adam_beta1", s.adam_beta1}, {"adam_beta2", s.adam_beta2},
          {"adam_eps", s.adam_eps},     {"batch_size", s.batch_size},
          {"seed", s.seed},             {"strategy", to_string(s.strategy)},
          {"cost_kind", to_string(s.cost_kind)}, {"upstream", to_string(s.upstream)}};
}

std::vector<std::uint64_t> parse_seeds(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of seeds");
  std::vector<std::uint64_t> out;
  for (const auto& v : j) {
    if (!v.is_number_unsigned()) throw ConfigError(where + ": seeds must be non-negative integers");
    out.push_back(v.get<std::uint64_t>());
  }
  return out;
}

DataConfig parse_data(const json& j, DataConfig d, const std::filesystem::path& base) {
  const std::string where = "data";
  check_keys(j, {"source", "seed", "n", "channels", "height", "width", "classes", "noise", "blobs_per_class",
                 "jitter", "files", "normalize", "max_examples", "splits"},
             where);
  if (j.contains("source")) {
    std::string s;
    read(j, "source", s, where);
    if (s == "synthetic") {
      d.source = DataSource::Synthetic;
    } else if (s == "cifar10-binary") {
      d.source = DataSource::Cifar10Binary;
    } else {
      throw ConfigError("data.source: unknown source '" + s + "'");
    }
  }
  read(j, "seed", d.seed, where);
  read(j, "n", d.synthetic.n, where);
  read(j, "channels", d.synthetic.channels, where);
  read(j, "height", d.synthetic.height, where);
  read(j, "width", d.synthetic.width, where);
  read(j, "classes", d.synthetic.classes, where);
  read(j, "noise", d.synthetic.noise, where);
  read(j, "blobs_per_class", d.synthetic.blobs_per_class, where);
  read(j, "jitter", d.synthetic.jitter, where);
  read(j, "normalize", d.cifar.normalize, where);
  read(j, "max_examples", d.cifar.max_examples, where);
  if (j.contains("files")) {
    std::vector<std::string> files;
    read(j, "files", files, where);
    d.files.clear();
    for (const auto& f : files) d.files.push_back(resolve(base, f));
  }
  if (j.contains("splits")) {
    const auto& s = j["splits"];
    check_keys(s, {"weight_train", "alpha_train", "eval"}, "data.splits");
    read(s, "weight_train", d.splits.weight_train, "data.splits");
    read(s, "alpha_train", d.splits.alpha_train, "data.splits");
    read(s, "eval", d.splits.eval, "data.splits");
  }
  return d;
}

json data_to_json(const DataConfig& d) {
  json files = json::array();
  for (const auto& f : d.files) files.push_back(f.generic_string());
  return {{"source", to_string(d.source)},
          {"seed", d.seed},
          {"n", d.synthetic.n},
          {"channels", d.synthetic.channels},
          {"height", d.synthetic.height},
          {"width", d.synthetic.width},
          {"classes", d.synthetic.classes},
          {"noise", d.synthetic.noise},
          {"blobs_per_class", d.synthetic.blobs_per_class},
          {"jitter", d.synthetic.jitter},
          {"files", files},
          {"normalize", d.cifar.normalize},
          {"max_examples", d.cifar.max_examples},
          {"splits",
           {{"weight_train", d.splits.weight_train}, {"alpha_train", d.splits.alpha_train}, {"eval", d.splits.eval}}}};
}

SuperNetSpec space_or_file(const json& j, const std::filesystem::path& base, const std::string& where) {
  if (j.is_string()) {
    const auto path = resolve(base, j.get<std::string>());
    std::ifstream in(path);
    if (!in) throw ConfigError(where + ": cannot open space file " + path.string());
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_space(doc);
  }
  return parse_space(j);
}

void parse_studies(const json& j, RunConfig& c, const std::filesystem::path& base) {
  check_keys(j, {"matthew", "multiseed", "interference"}, "study");
  if (j.contains("matthew")) {
    const auto& m = j["matthew"];
    const std::string where = "study.matthew";
    check_keys(m, {"seeds", "noise", "curves", "search"}, where);
    auto& sc = c.matthew.scenario;
    if (m.contains("seeds")) c.matthew.seeds = parse_seeds(m["seeds"], where + ".seeds");
    read(m, "noise", sc.noise, where);
    if (m.contains("curves")) {
      if (!m["curves"].is_array()) throw ConfigError(where + ".curves: expected an array");
      sc.curves.clear();
      for (const auto& cj : m["curves"]) {
        check_keys(cj, {"a_inf", "tau"}, where + ".curves[]");
        LearningCurve curve;
        read(cj, "a_inf", curve.a_inf, where + ".curves[]");
        read(cj, "tau", curve.tau, where + ".curves[]");
        curve.validate();
        sc.curves.push_back(curve);
      }
    }
    if (m.contains("search")) sc.search = parse_search(m["search"], sc.search, where + ".search");
  }
  if (j.contains("multiseed")) {
    const auto& m = j["multiseed"];
    const std::string where = "study.multiseed";
    check_keys(m, {"n_seeds", "flops_window", "train"}, where);
    read(m, "n_seeds", c.multiseed.n_seeds, where);
    read(m, "flops_window", c.multiseed.flops_window, where);
    if (m.contains("train")) {
      const auto& t = m["train"];
      check_keys(t, {"epochs", "batch_size", "lr", "momentum", "cosine_decay"}, where + ".train");
      read(t, "epochs", c.multiseed.train.epochs, where + ".train");
      read(t, "batch_size", c.multiseed.train.batch_size, where + ".train");
      read(t, "lr", c.multiseed.train.lr, where + ".train");
      read(t, "momentum", c.multiseed.train.momentum, where + ".train");
      read(t, "cosine_decay", c.multiseed.train.cosine_decay, where + ".train");
    }
  }
  if (j.contains("interference")) {
    const auto& m = j["interference"];
    const std::string where = "study.interference";
    check_keys(m, {"space", "ns_epochs", "batch_size", "lr", "momentum", "b4_kernels", "seeds"}, where);
    auto& ic = c.interference;
    if (m.contains("space")) ic.space = space_or_file(m["space"], base, where + ".space");
    read(m, "ns_epochs", ic.ns_epochs, where);
    read(m, "batch_size", ic.batch_size, where);
    read(m, "lr", ic.lr, where);
    read(m, "momentum", ic.momentum, where);
    read(m, "b4_kernels", ic.b4_kernels, where);
    if (m.contains("seeds")) ic.seeds = parse_seeds(m["seeds"], where + ".seeds");
  }
}

json studies_to_json(const RunConfig& c) {
  json curves = json::array();
  for (const auto& cv : c.matthew.scenario.curves) curves.push_back({{"a_inf", cv.a_inf}, {"tau", cv.tau}});
  const auto& t = c.multiseed.train;
  const auto& ic = c.interference;
  return {{"matthew",
           {{"seeds", c.matthew.seeds},
            {"noise", c.matthew.scenario.noise},
            {"curves", curves},
            {"search", search_to_json(c.matthew.scenario.search)}}},
          {"multiseed",
           {{"n_seeds", c.multiseed.n_seeds},
            {"flops_window", c.multiseed.flops_window},
            {"train", {{"epochs", t.epochs}, {"batch_size", t.batch_size}, {"lr", t.lr}, {"momentum", t.momentum},
                       {"cosine_decay", t.cosine_decay}}}}},
          {"interference",
           {{"space", space_to_json(ic.space)},
            {"ns_epochs", ic.ns_epochs},
            {"batch_size", ic.batch_size},
            {"lr", ic.lr},
            {"momentum", ic.momentum},
            {"b4_kernels", ic.b4_kernels},
            {"seeds", ic.seeds}}}};
}

}  // namespace

SuperNetSpec parse_space(const json& j) {
  const std::string where = "space";
  check_keys(j, {"input", "stem", "blocks", "head", "classes"}, where);
  SuperNetSpec s;
  if (!j.contains("input") || !j.contains("blocks")) throw ConfigError("space: 'input' and 'blocks' are required");
  std::vector<int> input;
  read(j, "input", input, where);
  if (input.size() != 3) throw ConfigError("space.input: expected [channels, height, width]");
  s.in_channels = input[0];
  s.height = input[1];
  s.width = input[2];
  read(j, "stem", s.stem_channels, where);
  read(j, "head", s.head_channels, where);
  read(j, "classes", s.num_classes, where);
  if (!j["blocks"].is_array()) throw ConfigError("space.blocks: expected an array");
  for (const auto& b : j["blocks"]) {
    check_keys(b, {"in", "out", "stride"}, "space.blocks[]");
    BlockDescriptor d;
    if (!b.contains("in") || !b.contains("out")) throw ConfigError("space.blocks[]: 'in' and 'out' are required");
    read(b, "in", d.in_channels, "space.blocks[]");
    read(b, "out", d.out_channels, "space.blocks[]");
    read(b, "stride", d.stride, "space.blocks[]");
    s.blocks.push_back(d);
  }
  s.validate();
  return s;
}

json space_to_json(const SuperNetSpec& s) {
  json blocks = json::array();
  for (const auto& b : s.blocks) blocks.push_back({{"in", b.in_channels}, {"out", b.out_channels}, {"stride", b.stride}});
  return {{"input", {s.in_channels, s.height, s.width}},
          {"stem", s.stem_channels},
          {"blocks", blocks},
          {"head", s.head_channels},
          {"classes", s.num_classes}};
}

RunConfig default_run_config() {
  RunConfig c;
  c.space.in_channels = 3;
  c.space.height = 8;
  c.space.width = 8;
  c.space.stem_channels = 8;
  c.space.blocks = {{8, 8, 1}, {8, 16, 2}, {16, 16, 1}, {16, 16, 1}};
  c.space.head_channels = 32;
  c.space.num_classes = 4;

  c.search.s_max = 8;
  c.search.phase1_steps = 150;
  c.search.phase2_steps = 10;
  c.search.lr_w = 0.01;
  c.search.lr_alpha = 0.02;
  c.search.batch_size = 16;

  c.data.seed = 7;
  c.data.synthetic.n = 3000;
  c.data.synthetic.height = 8;
  c.data.synthetic.width = 8;
  c.data.synthetic.classes = 4;
  c.data.synthetic.noise = 3.0;
  c.data.synthetic.jitter = 1;
  c.data.splits = {0.4, 0.2, 0.4};

  c.multiseed.train.epochs = 12;
  c.multiseed.train.batch_size = 16;
  c.multiseed.train.lr = 0.01;

  c.interference.space = c.space;
  c.interference.space.blocks = {{8, 8, 1}, {8, 16, 2}};
  c.interference.ns_epochs = 15;
  return c;
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, {"space", "search", "data", "latency_table", "output_dir", "study"}, "config");
  RunConfig c = default_run_config();
  if (doc.contains("space")) c.space = space_or_file(doc["space"], base_dir, "space");
  if (doc.contains("search")) c.search = parse_search(doc["search"], c.search, "search");
  if (doc.contains("data")) c.data = parse_data(doc["data"], c.data, base_dir);
  if (doc.contains("latency_table") && !doc["latency_table"].is_null()) {
    std::string p;
    read(doc, "latency_table", p, "config");
    c.latency_table = resolve(base_dir, p);
  }
  if (doc.contains("output_dir")) {
    std::string p;
    read(doc, "output_dir", p, "config");
    c.output_dir = p;
  }
  if (doc.contains("study")) parse_studies(doc["study"], c, base_dir);
  validate_run_config(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

void validate_run_config(const RunConfig& c) {
  c.space.validate();
  std::size_t max_m = 0;
  for (const auto& b : c.space.blocks) max_m = std::max(max_m, candidate_specs(b).size());
  c.search.validate(max_m);
  const auto& sp = c.data.splits;
  if (sp.weight_train <= 0 || sp.alpha_train <= 0 || sp.eval < 0 ||
      std::abs(sp.weight_train + sp.alpha_train + sp.eval - 1.0) > 1e-9) {
    throw ConfigError("data.splits: fractions must be non-negative, weight_train and alpha_train positive, sum 1");
  }
  if (c.data.source == DataSource::Synthetic) {
    const auto& s = c.data.synthetic;
    if (s.classes < 2) throw ConfigError("data.classes must be >= 2");
    if (s.channels != c.space.in_channels || s.height != c.space.height || s.width != c.space.width) {
      throw ConfigError("data image shape does not match space.input");
    }
    if (s.classes != c.space.num_classes) throw ConfigError("data.classes does not match space.classes");
    if (static_cast<double>(s.n) * sp.alpha_train < 1) throw ConfigError("alpha-train split would be empty");
  } else {
    if (c.data.files.empty()) throw ConfigError("data.files: cifar10-binary needs at least one file");
    if (c.space.in_channels != 3 || c.space.height != 32 || c.space.width != 32 || c.space.num_classes != 10) {
      throw ConfigError("cifar10-binary needs space.input [3,32,32] and 10 classes");
    }
  }
  if (c.search.batch_size < 1) throw ConfigError("search.batch_size must be >= 1");
  if (c.multiseed.n_seeds < 1) throw ConfigError("study.multiseed.n_seeds must be >= 1");
  if (!(c.multiseed.flops_window > 0)) throw ConfigError("study.multiseed.flops_window must be positive");
  if (c.multiseed.train.epochs < 1 || c.multiseed.train.batch_size < 1) {
    throw ConfigError("study.multiseed.train: epochs and batch_size must be >= 1");
  }
  c.interference.space.validate();
  if (c.interference.space.blocks.size() != 2) throw ConfigError("study.interference.space needs two blocks");
  if (c.interference.ns_epochs < 1) throw ConfigError("study.interference.ns_epochs must be >= 1");
  if (c.matthew.scenario.curves.empty()) throw ConfigError("study.matthew.curves must not be empty");
  c.matthew.scenario.search.validate(c.matthew.scenario.curves.size());
}

json effective_config(const RunConfig& c) {
  json j = {{"space", space_to_json(c.space)},
            {"search", search_to_json(c.search)},
            {"data", data_to_json(c.data)},
            {"output_dir", c.output_dir.generic_string()},
            {"study", studies_to_json(c)}};
  j["latency_table"] = c.latency_table ? json(c.latency_table->generic_string()) : json(nullptr);
  return j;
}

std::string config_hash(const RunConfig& c) {
  // Where results land does not change them.
  auto doc = effective_config(c);
  doc.erase("output_dir");
  const auto h = fnv1a64(doc.dump());
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) out[static_cast<std::size_t>(i)] = digits[(h >> (60 - 4 * i)) & 0xf];
  return out;
}

}  // namespace bdnas
