#pragma once

// Binary weights container:
//   "GSWT" | u32 version | u64 spec hash | u32 layer count |
//   per layer: u32 kernel length, f32[kernel], u32 bias length, f32[bias]
// All integers and reals little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "grainscope/common/error.hpp"
#include "grainscope/nn/model_spec.hpp"
#include "grainscope/nn/weights.hpp"

namespace grainscope::nn {

inline constexpr char kCheckpointMagic[4] = {'G', 'S', 'W', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i)
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float f) { put_le(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : b_(bytes) {}
  template <class U>
  U le() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw DataError("checkpoint truncated");
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return b_.size(); }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace detail

template <class Real>
std::string encode_checkpoint(const ModelSpec& spec, const Weights<Real>& w) {
  if (!w.matches(spec)) throw ConfigError("weights do not match model spec");
  std::string out(kCheckpointMagic, 4);
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint64_t>(out, spec.hash());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w.layers.size()));
  for (const auto& l : w.layers) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.kernel.size()));
    for (Real v : l.kernel) detail::put_f32(out, static_cast<float>(v));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.bias.size()));
    for (Real v : l.bias) detail::put_f32(out, static_cast<float>(v));
  }
  return out;
}

/// Per-layer array lengths stored in a checkpoint against those `spec`
/// expects, as "; layer N name: kernel A vs B" entries.
template <class Real>
std::string shape_diff(const ModelSpec& spec, const Weights<Real>& expected, const std::string& bytes) {
  std::string out;
  try {
    detail::Reader r(bytes);
    for (int i = 0; i < 4 + 4 + 8; ++i) r.le<std::uint8_t>();
    const auto count = r.le<std::uint32_t>();
    if (count != expected.layers.size())
      out += "; " + std::to_string(count) + " layers vs " + std::to_string(expected.layers.size()) + " expected";
    for (std::uint32_t i = 0; i < count; ++i) {
      const auto nk = r.le<std::uint32_t>();
      r.need(4ull * nk);
      for (std::uint32_t k = 0; k < nk; ++k) r.le<std::uint32_t>();
      const auto nb = r.le<std::uint32_t>();
      for (std::uint32_t k = 0; k < nb; ++k) r.le<std::uint32_t>();
      if (i >= expected.layers.size()) {
        out += "; extra layer " + std::to_string(i + 1) + ": kernel " + std::to_string(nk) + " bias " + std::to_string(nb);
        continue;
      }
      const auto& l = expected.layers[i];
      const std::string name = "; layer " + std::to_string(i + 1) + " " + spec.layers[i].name + ": ";
      if (nk != l.kernel.size()) out += name + "kernel " + std::to_string(nk) + " vs " + std::to_string(l.kernel.size());
      if (nb != l.bias.size()) out += name + "bias " + std::to_string(nb) + " vs " + std::to_string(l.bias.size());
    }
  } catch (const DataError&) {
    out += "; truncated checkpoint";
  }
  return out.empty() ? "; same array shapes (settings differ)" : out;
}

/// Decodes and checks the container against `spec` (hash and array shapes).
template <class Real>
Weights<Real> decode_checkpoint(const ModelSpec& spec, const std::string& bytes) {
  detail::Reader r(bytes);
  r.need(4);
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw DataError("not a weights checkpoint (bad magic)");
  for (int i = 0; i < 4; ++i) r.le<std::uint8_t>();
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto hash = r.le<std::uint64_t>();
  Weights<Real> w = Weights<Real>::zeros(spec);
  if (hash != spec.hash()) throw DataError("checkpoint was written for a different model spec" + shape_diff(spec, w, bytes));
  const auto count = r.le<std::uint32_t>();
  if (count != spec.layers.size()) throw DataError("checkpoint layer count mismatch");
  for (auto& l : w.layers) {
    const auto nk = r.le<std::uint32_t>();
    if (nk != l.kernel.size()) throw DataError("checkpoint kernel length mismatch");
    for (auto& v : l.kernel) v = static_cast<Real>(r.f32());
    const auto nb = r.le<std::uint32_t>();
    if (nb != l.bias.size()) throw DataError("checkpoint bias length mismatch");
    for (auto& v : l.bias) v = static_cast<Real>(r.f32());
  }
  if (r.pos() != r.size()) throw DataError("trailing bytes after checkpoint");
  return w;
}

template <class Real>
void save_checkpoint(const std::filesystem::path& path, const ModelSpec& spec,
                     const Weights<Real>& w) {
  const std::string bytes = encode_checkpoint(spec, w);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

template <class Real>
Weights<Real> load_checkpoint(const std::filesystem::path& path, const ModelSpec& spec) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint<Real>(spec, bytes);
}

}  // namespace grainscope::nn
