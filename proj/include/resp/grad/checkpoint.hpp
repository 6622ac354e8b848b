#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "resp/grad/tensor.hpp"

// Layout (little-endian): "RSPCKPT\0", u32 version, u32 count, then per
// tensor: u32 name length, name bytes, u8 dtype (0 f32, 1 f64), u32 rank,
// u64 dims[rank], raw element bytes.

namespace resp::grad {

inline constexpr char kCheckpointMagic[8] = {'R', 'S', 'P', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor<double> f64;  // used when is_f32 is false
  Tensor<float> f32;
  bool is_f32 = false;
};

namespace ckpt_detail {

static_assert(sizeof(float) == 4 && sizeof(double) == 8);

template <class U>
void put(std::string& out, U v) {
  unsigned char b[sizeof(U)];
  std::memcpy(b, &v, sizeof(U));
  out.append(reinterpret_cast<const char*>(b), sizeof(U));
}

class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}
  template <class U>
  U get() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, s_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto r = s_.substr(pos_, n);
    pos_ += n;
    return r;
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (s_.size() - pos_ < n) throw Error(Errc::ParseError, "checkpoint truncated");
  }
  std::string_view s_;
  std::size_t pos_ = 0;
};

template <class T>
void put_tensor(std::string& out, const std::string& name, const Tensor<T>& t) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put<std::uint8_t>(out, std::is_same_v<T, float> ? 0 : 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) put<std::uint64_t>(out, d);
  out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(T));
}

}  // namespace ckpt_detail

template <class T>
std::string encode_checkpoint(const std::vector<std::pair<std::string, const Tensor<T>*>>& tensors) {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  ckpt_detail::put<std::uint32_t>(out, kCheckpointVersion);
  ckpt_detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) ckpt_detail::put_tensor(out, name, *t);
  return out;
}

inline std::vector<NamedTensor> decode_checkpoint(std::string_view bytes) {
  ckpt_detail::Reader r(bytes);
  if (r.bytes(8) != std::string_view(kCheckpointMagic, 8)) throw Error(Errc::ParseError, "not a checkpoint file");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw Error(Errc::ParseError, "unsupported checkpoint version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor nt;
    nt.name = std::string(r.bytes(r.get<std::uint32_t>()));
    const auto dtype = r.get<std::uint8_t>();
    if (dtype > 1) throw Error(Errc::ParseError, "unknown dtype in checkpoint");
    const auto rank = r.get<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    const std::size_t n = numel(shape);
    nt.is_f32 = dtype == 0;
    if (nt.is_f32) {
      auto raw = r.bytes(n * 4);
      nt.f32 = Tensor<float>(shape);
      std::memcpy(nt.f32.data.data(), raw.data(), raw.size());
    } else {
      auto raw = r.bytes(n * 8);
      nt.f64 = Tensor<double>(shape);
      std::memcpy(nt.f64.data.data(), raw.data(), raw.size());
    }
    out.push_back(std::move(nt));
  }
  if (!r.done()) throw Error(Errc::ParseError, "trailing bytes in checkpoint");
  return out;
}

inline void write_bytes_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
    throw Error(Errc::IoFailure, "cannot write " + path.string());
}

inline std::string read_bytes_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace resp::grad
