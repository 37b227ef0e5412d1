#include "bdnas/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace bdnas {
namespace {

constexpr char kMagic[6] = {'B', 'D', 'N', 'A', 'S', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

bool get_u64(std::istream& is, std::uint64_t& v) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

std::uint64_t need_u64(std::istream& is, const char* what) {
  std::uint64_t v;
  if (!get_u64(is, v)) throw FormatError(std::string("checkpoint truncated while reading ") + what);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof kMagic);
  for (const auto& e : params.entries()) {
    put_u64(os, e.name.size());
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    const auto& dims = e.tensor.shape().dims();
    put_u64(os, dims.size());
    for (auto d : dims) put_u64(os, d);
    for (Real v : e.tensor.values()) put_u64(os, std::bit_cast<std::uint64_t>(static_cast<double>(v)));
  }
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw FormatError(path.string() + " is not a BDNAS1 checkpoint");
  }
  ParamSet out;
  std::uint64_t name_len;
  while (get_u64(is, name_len)) {
    if (name_len > (1u << 20)) throw FormatError("implausible tensor name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name_len))) {
      throw FormatError("checkpoint truncated in tensor name");
    }
    const auto rank = need_u64(is, "rank");
    if (rank > 4) throw FormatError("tensor " + name + " has rank " + std::to_string(rank));
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = need_u64(is, "dims");
    Shape shape(dims);
    std::vector<Real> values(shape.numel());
    for (auto& v : values) v = std::bit_cast<double>(need_u64(is, "values"));
    out.add(std::move(name), Tensor::from(std::move(shape), std::move(values)));
  }
  if (!is.eof()) throw FormatError("checkpoint truncated in record header");
  return out;
}

void restore_values(ParamSet& dst, const ParamSet& src) {
  for (auto& e : dst.entries()) {
    const Tensor& s = src.at(e.name);
    if (s.shape() != e.tensor.shape()) {
      throw ShapeError("checkpoint tensor " + e.name + " has shape " + s.shape().str() +
                       ", expected " + e.tensor.shape().str());
    }
    auto dv = e.tensor.mutable_values();
    std::copy(s.values().begin(), s.values().end(), dv.begin());
  }
}

}  // namespace bdnas
