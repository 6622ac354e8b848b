#pragma once

#include <vector>

#include "resp/error.hpp"
#include "resp/signal/waveform.hpp"

namespace resp {

/// Consecutive equal-length windows; the last one carries `pad` trailing zeros.
struct Chunked {
  std::vector<std::vector<double>> segments;
  std::size_t pad = 0;
  int sample_rate = kCanonicalRate;
};

inline Chunked chunk(const Waveform& w, double segment_s = 4.0) {
  const std::size_t seg = samples_for(segment_s, w.sample_rate);
  if (seg == 0) throw Error(Errc::InvalidArgument, "segment length must be positive");
  if (w.empty()) throw Error(Errc::SignalTooShort, "cannot chunk an empty waveform");
  Chunked c;
  c.sample_rate = w.sample_rate;
  const std::size_t count = (w.size() + seg - 1) / seg;
  c.pad = count * seg - w.size();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t b = i * seg, e = std::min(w.size(), b + seg);
    std::vector<double> s(seg, 0.0);
    std::copy(w.samples.begin() + static_cast<std::ptrdiff_t>(b), w.samples.begin() + static_cast<std::ptrdiff_t>(e),
              s.begin());
    c.segments.push_back(std::move(s));
  }
  return c;
}

/// Concatenates the segments and drops the recorded trailing pad.
inline Waveform reassemble(const Chunked& c) {
  if (c.segments.empty()) throw Error(Errc::LengthMismatch, "no segments to reassemble");
  const std::size_t seg = c.segments.front().size();
  for (const auto& s : c.segments)
    if (s.size() != seg) throw Error(Errc::LengthMismatch, "segments differ in length");
  if (c.pad >= seg) throw Error(Errc::LengthMismatch, "pad is not shorter than one segment");
  Waveform w;
  w.sample_rate = c.sample_rate;
  w.samples.reserve(seg * c.segments.size());
  for (const auto& s : c.segments) w.samples.insert(w.samples.end(), s.begin(), s.end());
  w.samples.resize(w.samples.size() - c.pad);
  return w;
}

}  // namespace resp
