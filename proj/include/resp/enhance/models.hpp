#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "resp/enhance/segments.hpp"
#include "resp/enhance/spectral_subtract.hpp"
#include "resp/grad.hpp"
#include "resp/seed.hpp"
#include "resp/spectral/stft.hpp"

namespace resp {

enum class EnhancerKind { SpectralSubtract, TinyWaveUNet, TinyMaskNet };

inline std::string_view enhancer_name(EnhancerKind k) {
  switch (k) {
    case EnhancerKind::SpectralSubtract: return "spectral-subtract";
    case EnhancerKind::TinyWaveUNet: return "wave-unet";
    case EnhancerKind::TinyMaskNet: return "mask-net";
  }
  return "?";
}

inline EnhancerKind parse_enhancer(std::string_view s) {
  if (s == "spectral-subtract") return EnhancerKind::SpectralSubtract;
  if (s == "wave-unet") return EnhancerKind::TinyWaveUNet;
  if (s == "mask-net") return EnhancerKind::TinyMaskNet;
  throw Error(Errc::ParseError, "unknown enhancer '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Time-domain U-Net: three encoder levels (16/32/64 channels, kernel 15,
// PReLU, stride-2 decimation), a 64-channel bottleneck, linear x2 upsampling
// with channel-concatenated skips, and a 1x1 head. The head output is added
// to the input, so the network learns a correction.

namespace wave_unet {

inline constexpr std::size_t kKernel = 15;
inline constexpr std::size_t kEnc[3] = {16, 32, 64};
inline constexpr std::size_t kBottleneck = 64;
inline constexpr std::size_t kDec[3] = {32, 16, 16};  // decoder outputs, deepest level first

template <class T>
void add_conv(grad::ParamSet<T>& ps, const std::string& name, std::size_t out, std::size_t in, std::size_t k,
              Rng& rng, bool prelu) {
  ps.add(name + ".w", grad::he_uniform<T>({out, in, k}, in * k, rng));
  ps.add(name + ".b", grad::Tensor<T>({out}));
  if (prelu) ps.add(name + ".a", grad::Tensor<T>({out}, T(0.25)));
}

template <class T>
grad::Var<T> conv_block(const grad::ParamSet<T>& ps, const std::string& name, const grad::Var<T>& x) {
  auto y = grad::conv1d(x, ps[name + ".w"], ps[name + ".b"], 1, kKernel / 2);
  return grad::prelu(y, ps[name + ".a"]);
}

}  // namespace wave_unet

template <class T>
grad::ParamSet<T> wave_unet_params(std::uint64_t seed) {
  using namespace wave_unet;
  Rng rng = make_rng(derive_seed(seed, "init", "wave-unet"));
  grad::ParamSet<T> ps;
  add_conv(ps, "enc1", kEnc[0], 1, kKernel, rng, true);
  add_conv(ps, "enc2", kEnc[1], kEnc[0], kKernel, rng, true);
  add_conv(ps, "enc3", kEnc[2], kEnc[1], kKernel, rng, true);
  add_conv(ps, "mid", kBottleneck, kEnc[2], kKernel, rng, true);
  add_conv(ps, "dec3", kDec[0], kBottleneck + kEnc[2], kKernel, rng, true);
  add_conv(ps, "dec2", kDec[1], kDec[0] + kEnc[1], kKernel, rng, true);
  add_conv(ps, "dec1", kDec[2], kDec[1] + kEnc[0], kKernel, rng, true);
  add_conv(ps, "head", 1, kDec[2], 1, rng, false);
  return ps;
}

/// x: [N, 1, L] -> [N, 1, L].
template <class T>
grad::Var<T> wave_unet_forward(const grad::ParamSet<T>& ps, const grad::Var<T>& x) {
  using namespace wave_unet;
  using grad::concat_channels;
  using grad::decimate1d;
  using grad::fit_length1d;
  using grad::upsample_linear1d;
  auto e1 = conv_block(ps, "enc1", x);
  auto e2 = conv_block(ps, "enc2", decimate1d(e1));
  auto e3 = conv_block(ps, "enc3", decimate1d(e2));
  auto m = conv_block(ps, "mid", decimate1d(e3));
  auto d3 = conv_block(ps, "dec3", concat_channels(fit_length1d(upsample_linear1d(m), e3.dim(2)), e3));
  auto d2 = conv_block(ps, "dec2", concat_channels(fit_length1d(upsample_linear1d(d3), e2.dim(2)), e2));
  auto d1 = conv_block(ps, "dec1", concat_channels(fit_length1d(upsample_linear1d(d2), e1.dim(2)), e1));
  auto head = grad::conv1d(d1, ps["head.w"], ps["head.b"]);
  return grad::add(x, head);
}

// ---------------------------------------------------------------------------
// Time-frequency mask network: three 3x3 same-padded conv2d layers over
// [frames, bins] (16, 16, 1 channels; PReLU, PReLU, sigmoid). Input
// channels are log magnitude relative to its global mean, to its per-bin
// mean over time, and to its per-bin 10th percentile over time.

namespace mask_net {

inline constexpr std::size_t kChannels = 16;
inline constexpr std::size_t kInputs = 3;
inline constexpr double kLogFloor = 1e-3;

template <class T>
void add_conv(grad::ParamSet<T>& ps, const std::string& name, std::size_t out, std::size_t in, Rng& rng,
              bool prelu) {
  ps.add(name + ".w", grad::he_uniform<T>({out, in, 3, 3}, in * 9, rng));
  ps.add(name + ".b", grad::Tensor<T>({out}));
  if (prelu) ps.add(name + ".a", grad::Tensor<T>({out}, T(0.25)));
}

}  // namespace mask_net

template <class T>
grad::ParamSet<T> mask_net_params(std::uint64_t seed) {
  using namespace mask_net;
  Rng rng = make_rng(derive_seed(seed, "init", "mask-net"));
  grad::ParamSet<T> ps;
  add_conv(ps, "conv1", kChannels, kInputs, rng, true);
  add_conv(ps, "conv2", kChannels, kChannels, rng, true);
  add_conv(ps, "conv3", 1, kChannels, rng, false);
  return ps;
}

/// features: [N, kInputs, frames, bins] -> mask in (0, 1), [N, 1, frames, bins].
template <class T>
grad::Var<T> mask_net_forward(const grad::ParamSet<T>& ps, const grad::Var<T>& features) {
  auto h = grad::prelu(grad::conv2d(features, ps["conv1.w"], ps["conv1.b"], 1, 1), ps["conv1.a"]);
  h = grad::prelu(grad::conv2d(h, ps["conv2.w"], ps["conv2.b"], 1, 1), ps["conv2.a"]);
  return grad::sigmoid(grad::conv2d(h, ps["conv3.w"], ps["conv3.b"], 1, 1));
}

/// Writes the input channels for one magnitude spectrogram (frames x bins,
/// frame-major) into `dst`, which holds kInputs * frames * bins values.
template <class T>
void mask_net_features(const std::vector<double>& mag, std::size_t frames, std::size_t bins, T* dst) {
  const std::size_t n = frames * bins;
  std::vector<double> a(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += a[i] = std::log(mag[i] + mask_net::kLogFloor);
  const double global = total / static_cast<double>(n);
  std::vector<double> mean_bin(bins, 0.0), floor_bin(bins), col(frames);
  const std::size_t q = frames / 10;
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t f = 0; f < frames; ++f) {
      col[f] = a[f * bins + k];
      mean_bin[k] += col[f];
    }
    mean_bin[k] /= static_cast<double>(frames);
    // Per-bin noise floor: the 10th percentile of that bin over time.
    std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(q), col.end());
    floor_bin[k] = col[q];
  }
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t k = 0; k < bins; ++k) {
      const std::size_t i = f * bins + k;
      dst[i] = static_cast<T>(a[i] - global);
      dst[n + i] = static_cast<T>(a[i] - mean_bin[k]);
      dst[2 * n + i] = static_cast<T>(a[i] - floor_bin[k]);
    }
}

// ---------------------------------------------------------------------------

/// The enhancement stage: maps a noisy waveform to a clean estimate.
struct EnhancerModel {
  EnhancerKind kind = EnhancerKind::SpectralSubtract;
  double segment_s = 4.0;
  StftConfig stft = StftConfig::enhancer();  // TinyMaskNet analysis
  SpectralSubtractConfig subtract;
  grad::ParamSet<float> params;
};

inline EnhancerModel build_enhancer(EnhancerKind kind, std::uint64_t seed) {
  EnhancerModel m;
  m.kind = kind;
  if (kind == EnhancerKind::TinyWaveUNet) m.params = wave_unet_params<float>(seed);
  if (kind == EnhancerKind::TinyMaskNet) m.params = mask_net_params<float>(seed);
  return m;
}

/// Noisy-magnitude analysis of a batch of equal-length segments, shared by
/// inference and training.
struct MaskBatch {
  std::vector<ComplexSpectrogram> spectra;
  grad::Tensor<float> features;   // [N, kInputs, frames, bins]
  grad::Tensor<float> magnitude;  // [N, 1, frames, bins]
};

inline MaskBatch mask_batch(const std::vector<const std::vector<double>*>& segments, const StftConfig& cfg,
                            int sample_rate) {
  MaskBatch b;
  const std::size_t N = segments.size();
  for (const auto* s : segments) b.spectra.push_back(stft(Waveform(*s, sample_rate), cfg));
  const std::size_t F = b.spectra.front().frames, B = cfg.bins();
  b.features = grad::Tensor<float>({N, mask_net::kInputs, F, B});
  b.magnitude = grad::Tensor<float>({N, 1, F, B});
  for (std::size_t n = 0; n < N; ++n) {
    if (b.spectra[n].frames != F) throw Error(Errc::LengthMismatch, "segments differ in length");
    const auto mag = magnitude(b.spectra[n]);
    mask_net_features(mag, F, B, b.features.data.data() + n * mask_net::kInputs * F * B);
    for (std::size_t i = 0; i < F * B; ++i) b.magnitude[n * F * B + i] = static_cast<float>(mag[i]);
  }
  return b;
}

/// Mask values for each segment, [N, 1, frames, bins].
inline grad::Tensor<float> predict_mask(const EnhancerModel& m, const MaskBatch& b) {
  grad::NoGradGuard ng;
  return mask_net_forward(m.params, grad::constant(b.features)).value();
}

/// Enhances equal-length segments in one batch.
inline std::vector<std::vector<double>> enhance_segments(const EnhancerModel& m,
                                                         const std::vector<const std::vector<double>*>& segments,
                                                         int sample_rate) {
  std::vector<std::vector<double>> out;
  if (segments.empty()) return out;
  switch (m.kind) {
    case EnhancerKind::SpectralSubtract:
      for (const auto* s : segments)
        out.push_back(spectral_subtract(Waveform(*s, sample_rate), std::nullopt, m.subtract).samples);
      return out;
    case EnhancerKind::TinyWaveUNet: {
      const std::size_t N = segments.size(), L = segments.front()->size();
      grad::Tensor<float> x({N, 1, L});
      for (std::size_t n = 0; n < N; ++n) {
        if (segments[n]->size() != L) throw Error(Errc::LengthMismatch, "segments differ in length");
        for (std::size_t i = 0; i < L; ++i) x[n * L + i] = static_cast<float>((*segments[n])[i]);
      }
      grad::NoGradGuard ng;
      const auto y = wave_unet_forward(m.params, grad::constant(std::move(x))).value();
      for (std::size_t n = 0; n < N; ++n) out.emplace_back(y.data.begin() + n * L, y.data.begin() + (n + 1) * L);
      return out;
    }
    case EnhancerKind::TinyMaskNet: {
      MaskBatch b = mask_batch(segments, m.stft, sample_rate);
      const auto mask = predict_mask(m, b);
      const std::size_t F = b.spectra.front().frames, B = m.stft.bins();
      for (std::size_t n = 0; n < segments.size(); ++n) {
        ComplexSpectrogram& s = b.spectra[n];
        for (std::size_t i = 0; i < F * B; ++i) s.data[i] *= static_cast<double>(mask[n * F * B + i]);
        out.push_back(istft(s).samples);
      }
      return out;
    }
  }
  return out;
}

/// f(noisy): chunk into segments, enhance, reassemble. Output length equals
/// input length.
inline Waveform enhance(const EnhancerModel& m, const Waveform& noisy) {
  Chunked c = chunk(noisy, m.segment_s);
  std::vector<const std::vector<double>*> ptrs;
  for (const auto& s : c.segments) ptrs.push_back(&s);
  auto enhanced = enhance_segments(m, ptrs, noisy.sample_rate);
  const std::size_t seg = c.segments.front().size();
  for (std::size_t i = 0; i < enhanced.size(); ++i) {
    if (enhanced[i].size() != seg) throw Error(Errc::LengthMismatch, "enhancer changed the segment length");
    c.segments[i] = std::move(enhanced[i]);
  }
  Waveform out = reassemble(c);
  if (out.size() != noisy.size()) throw Error(Errc::LengthMismatch, "enhanced length differs from input");
  return out;
}

// Checkpoints store the parameters under "<kind>/" plus a "meta/config"
// row: kind, segment_s, win_len, hop, fft_size, centered.
inline std::string encode_enhancer(const EnhancerModel& m) {
  grad::Tensor<float> meta({6}, std::vector<float>{static_cast<float>(m.kind), static_cast<float>(m.segment_s),
                                                   static_cast<float>(m.stft.win_len), static_cast<float>(m.stft.hop),
                                                   static_cast<float>(m.stft.fft_size),
                                                   m.stft.centered ? 1.0f : 0.0f});
  auto tensors = m.params.tensors(std::string(enhancer_name(m.kind)) + "/");
  tensors.insert(tensors.begin(), {"meta/config", &meta});
  return grad::encode_checkpoint(tensors);
}

inline EnhancerModel decode_enhancer(std::string_view bytes) {
  const auto saved = grad::decode_checkpoint(bytes);
  const grad::NamedTensor* meta = nullptr;
  for (const auto& s : saved)
    if (s.name == "meta/config") meta = &s;
  if (!meta || !meta->is_f32 || meta->f32.size() != 6) throw Error(Errc::ParseError, "enhancer checkpoint lacks meta");
  const auto& v = meta->f32.data;
  const int kind = static_cast<int>(v[0]);
  if (kind < 0 || kind > 2) throw Error(Errc::ParseError, "unknown enhancer kind in checkpoint");
  EnhancerModel m = build_enhancer(static_cast<EnhancerKind>(kind), 0);
  m.segment_s = static_cast<double>(v[1]);
  m.stft = StftConfig{static_cast<std::size_t>(v[2]), static_cast<std::size_t>(v[3]), static_cast<std::size_t>(v[4]),
                      v[5] != 0.0f};
  m.params.load(saved, std::string(enhancer_name(m.kind)) + "/");
  return m;
}

}  // namespace resp
