#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "resp/error.hpp"
#include "resp/signal/waveform.hpp"

namespace resp {

namespace wav_detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

}  // namespace wav_detail

/// Decodes a RIFF/WAVE PCM byte stream. Integer PCM of 8/16/24/32 bits is
/// accepted; multichannel input is downmixed by averaging. 16-bit codes map
/// to amplitude code/32768. Chunks other than fmt and data are skipped.
inline Waveform decode_wav(std::string_view bytes) {
  using namespace wav_detail;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw Error(Errc::MalformedWav, "missing RIFF/WAVE header");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= n) {
    const unsigned char* ck = p + pos;
    const std::uint32_t len = read_u32(ck + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(ck, "fmt ", 4) == 0) {
      if (len < 16 || body + len > n) throw Error(Errc::MalformedWav, "truncated fmt chunk");
      format = read_u16(p + body);
      channels = read_u16(p + body + 2);
      rate = read_u32(p + body + 4);
      block_align = read_u16(p + body + 12);
      bits = read_u16(p + body + 14);
      if (format == kFormatExtensible) {
        if (len < 40) throw Error(Errc::MalformedWav, "truncated extensible fmt chunk");
        format = read_u16(p + body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(ck, "data", 4) == 0) {
      if (!have_fmt) throw Error(Errc::MalformedWav, "data chunk before fmt chunk");
      if (body + len > n) throw Error(Errc::MalformedWav, "truncated data chunk");
      data = p + body;
      data_len = len;
      break;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt) throw Error(Errc::MalformedWav, "no fmt chunk");
  if (data == nullptr) throw Error(Errc::MalformedWav, "no data chunk");
  if (format != kFormatPcm) throw Error(Errc::UnsupportedEncoding, "format tag " + std::to_string(format));
  if (bits != 8 && bits != 16 && bits != 24 && bits != 32)
    throw Error(Errc::UnsupportedEncoding, std::to_string(bits) + "-bit PCM");
  if (channels == 0 || rate == 0) throw Error(Errc::MalformedWav, "zero channels or sample rate");
  const std::size_t bytes_per = bits / 8u;
  if (block_align != channels * bytes_per) throw Error(Errc::MalformedWav, "inconsistent block align");

  const std::size_t frames = data_len / block_align;
  std::vector<double> out(frames, 0.0);
  const double scale = std::ldexp(1.0, -(static_cast<int>(bits) - 1));
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* s = data + f * block_align + c * bytes_per;
      std::int32_t v = 0;
      switch (bits) {
        case 8: v = static_cast<std::int32_t>(s[0]) - 128; break;
        case 16: v = static_cast<std::int16_t>(read_u16(s)); break;
        case 24: v = static_cast<std::int32_t>((std::uint32_t(s[0]) << 8) | (std::uint32_t(s[1]) << 16) |
                                               (std::uint32_t(s[2]) << 24)) >> 8;
          break;
        default: v = static_cast<std::int32_t>(read_u32(s)); break;
      }
      acc += static_cast<double>(v) * scale;
    }
    out[f] = acc / channels;
  }
  return Waveform(std::move(out), static_cast<int>(rate));
}

/// 16-bit PCM mono encoding. Amplitudes outside [-1, 1) clamp to the
/// extreme codes.
inline std::string encode_wav(const Waveform& w) {
  using namespace wav_detail;
  for (double x : w.samples)
    if (!std::isfinite(x)) throw Error(Errc::InvalidArgument, "cannot encode non-finite samples");
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_len);
  for (double x : w.samples) {
    const double code = std::clamp(std::nearbyint(x * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(code)));
  }
  return out;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

inline Waveform load_wav(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(Errc::IoFailure, "no such file " + path.string());
  return decode_wav(read_file_bytes(path));
}

inline void save_wav(const Waveform& w, const std::filesystem::path& path) {
  write_file_bytes(path, encode_wav(w));
}

}  // namespace resp
