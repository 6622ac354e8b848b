#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "resp/grad.hpp"
#include "resp/seed.hpp"
#include "resp/signal/waveform.hpp"
#include "resp/spectral/mel.hpp"

namespace resp {

inline constexpr std::size_t kEmbeddingDim = 64;

/// Log-mel CNN: three [conv2d 3x3 same, relu, max_pool 2x2] blocks with
/// 16/32/64 channels, global average pooling to a 64-dim embedding, and a
/// dense head producing one logit per class of the active mode.
struct ClassifierModel {
  LabelMode mode = LabelMode::Fabs3;
  LogMelConfig features;
  std::size_t time_pool = 8;  // log-mel frames pooled per classifier frame
  // Per-mel-band standardization fitted on the training features; empty
  // means identity.
  std::vector<float> input_mean;
  std::vector<float> input_std;
  grad::ParamSet<float> params;

  std::size_t classes() const { return static_cast<std::size_t>(num_classes(mode)); }
};

namespace classifier_detail {

inline constexpr std::size_t kBlockChannels[3] = {16, 32, 64};

template <class T>
grad::ParamSet<T> init_params(LabelMode mode, std::uint64_t seed) {
  Rng rng = make_rng(derive_seed(seed, "init", "classifier"));
  grad::ParamSet<T> ps;
  std::size_t in = 1;
  for (std::size_t b = 0; b < 3; ++b) {
    const std::size_t out = kBlockChannels[b];
    const std::string name = "block" + std::to_string(b + 1);
    ps.add(name + ".w", grad::he_uniform<T>({out, in, 3, 3}, in * 9, rng));
    ps.add(name + ".b", grad::Tensor<T>({out}));
    in = out;
  }
  const auto k = static_cast<std::size_t>(num_classes(mode));
  ps.add("head.w", grad::he_uniform<T>({kEmbeddingDim, k}, kEmbeddingDim, rng));
  ps.add("head.b", grad::Tensor<T>({k}));
  return ps;
}

}  // namespace classifier_detail

template <class T>
grad::ParamSet<T> classifier_params(LabelMode mode, std::uint64_t seed) {
  return classifier_detail::init_params<T>(mode, seed);
}

inline ClassifierModel build_classifier(LabelMode mode, std::uint64_t seed, std::size_t time_pool = 8) {
  if (time_pool == 0) throw Error(Errc::ConfigError, "time_pool must be positive");
  ClassifierModel m;
  m.mode = mode;
  m.time_pool = time_pool;
  m.params = classifier_params<float>(mode, seed);
  return m;
}

template <class T>
struct ClassifierOutput {
  grad::Var<T> embedding;  // [N, 64]
  grad::Var<T> logits;     // [N, classes]
};

/// x: standardized log-mel batch [N, 1, mels, frames]. Each pooling stage
/// needs at least 2 rows and columns, so inputs must be at least 8 x 8.
template <class T>
ClassifierOutput<T> classifier_forward(const grad::ParamSet<T>& ps, const grad::Var<T>& x) {
  grad::Var<T> h = x;
  for (int b = 1; b <= 3; ++b) {
    const std::string name = "block" + std::to_string(b);
    h = grad::max_pool2d(grad::relu(grad::conv2d(h, ps[name + ".w"], ps[name + ".b"], 1, 1)));
  }
  ClassifierOutput<T> out;
  out.embedding = grad::avg_pool_global(h);
  out.logits = grad::dense(out.embedding, ps["head.w"], ps["head.b"]);
  return out;
}

/// Unstandardized classifier input for one waveform: log-mel with the band
/// power averaged over groups of time_pool frames.
inline MelSpec classifier_features(const Waveform& w, const ClassifierModel& m) {
  return pool_time_power(log_mel(w, m.features), m.time_pool);
}

/// Stacks equal-shape features into [N, 1, mels, frames], standardized
/// with the model's input statistics.
inline grad::Tensor<float> feature_batch(const std::vector<const MelSpec*>& feats, const ClassifierModel& m) {
  if (feats.empty()) throw Error(Errc::EmptyDataset, "no features to batch");
  const std::size_t M = feats.front()->n_mels, F = feats.front()->frames;
  const bool norm = !m.input_mean.empty();
  if (norm && (m.input_mean.size() != M || m.input_std.size() != M))
    throw Error(Errc::ShapeMismatch, "input statistics do not match " + std::to_string(M) + " mel bands");
  grad::Tensor<float> x({feats.size(), 1, M, F});
  for (std::size_t n = 0; n < feats.size(); ++n) {
    if (feats[n]->n_mels != M || feats[n]->frames != F)
      throw Error(Errc::ShapeMismatch, "feature shapes differ within a batch");
    for (std::size_t r = 0; r < M; ++r) {
      const double mu = norm ? m.input_mean[r] : 0.0, inv = norm ? 1.0 / static_cast<double>(m.input_std[r]) : 1.0;
      for (std::size_t t = 0; t < F; ++t)
        x[(n * M + r) * F + t] = static_cast<float>((feats[n]->data[r * F + t] - mu) * inv);
    }
  }
  return x;
}

/// Per-band mean and standard deviation over every frame of every feature.
inline std::pair<std::vector<float>, std::vector<float>> feature_stats(const std::vector<const MelSpec*>& feats) {
  if (feats.empty()) throw Error(Errc::EmptyDataset, "no features");
  const std::size_t M = feats.front()->n_mels;
  std::vector<long double> s(M, 0.0L), ss(M, 0.0L);
  std::size_t n = 0;
  for (const auto* f : feats) {
    if (f->n_mels != M) throw Error(Errc::ShapeMismatch, "feature band counts differ");
    for (std::size_t r = 0; r < M; ++r)
      for (std::size_t t = 0; t < f->frames; ++t) {
        const long double v = f->at(r, t);
        s[r] += v;
        ss[r] += v * v;
      }
    n += f->frames;
  }
  if (n == 0) throw Error(Errc::EmptyDataset, "no feature frames");
  std::vector<float> mean(M), sd(M);
  for (std::size_t r = 0; r < M; ++r) {
    const long double mu = s[r] / static_cast<long double>(n);
    const double v = static_cast<double>(std::max(0.0L, ss[r] / static_cast<long double>(n) - mu * mu));
    mean[r] = static_cast<float>(mu);
    sd[r] = static_cast<float>(std::sqrt(v) > 1e-6 ? std::sqrt(v) : 1.0);
  }
  return {mean, sd};
}

// Checkpoints store parameters under "classifier/", a "meta/config" row
// (mode, time_pool, n_mels, win_len, hop, fft_size, centered, fmin, fmax)
// and the per-band statistics as "meta/input_mean" and "meta/input_std".
inline std::string encode_classifier(const ClassifierModel& m) {
  const auto& f = m.features;
  grad::Tensor<float> meta({9}, std::vector<float>{
                                     m.mode == LabelMode::Icbhi4 ? 0.0f : 1.0f, static_cast<float>(m.time_pool),
                                     static_cast<float>(f.n_mels), static_cast<float>(f.stft.win_len),
                                     static_cast<float>(f.stft.hop), static_cast<float>(f.stft.fft_size),
                                     f.stft.centered ? 1.0f : 0.0f, static_cast<float>(f.fmin),
                                     static_cast<float>(f.fmax)});
  grad::Tensor<float> mean({m.input_mean.size()}, m.input_mean), sd({m.input_std.size()}, m.input_std);
  auto tensors = m.params.tensors("classifier/");
  tensors.insert(tensors.begin(), {{"meta/config", &meta}, {"meta/input_mean", &mean}, {"meta/input_std", &sd}});
  return grad::encode_checkpoint(tensors);
}

inline ClassifierModel decode_classifier(std::string_view bytes) {
  const auto saved = grad::decode_checkpoint(bytes);
  const grad::NamedTensor *meta = nullptr, *mean = nullptr, *sd = nullptr;
  for (const auto& s : saved) {
    if (s.name == "meta/config") meta = &s;
    if (s.name == "meta/input_mean") mean = &s;
    if (s.name == "meta/input_std") sd = &s;
  }
  if (!meta || !meta->is_f32 || meta->f32.size() != 9 || !mean || !mean->is_f32 || !sd || !sd->is_f32 ||
      mean->f32.size() != sd->f32.size())
    throw Error(Errc::ParseError, "classifier checkpoint lacks meta");
  const auto& v = meta->f32.data;
  ClassifierModel m = build_classifier(v[0] == 0.0f ? LabelMode::Icbhi4 : LabelMode::Fabs3, 0,
                                       static_cast<std::size_t>(v[1]));
  m.features.n_mels = static_cast<std::size_t>(v[2]);
  m.features.stft = StftConfig{static_cast<std::size_t>(v[3]), static_cast<std::size_t>(v[4]),
                               static_cast<std::size_t>(v[5]), v[6] != 0.0f};
  m.features.fmin = static_cast<double>(v[7]);
  m.features.fmax = static_cast<double>(v[8]);
  m.input_mean = mean->f32.data;
  m.input_std = sd->f32.data;
  m.params.load(saved, "classifier/");
  return m;
}

}  // namespace resp
