#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "resp/corpus/clip.hpp"
#include "resp/enhance/models.hpp"

namespace resp {

enum class EnhLoss { L1, MSE };

inline std::string_view enh_loss_name(EnhLoss l) { return l == EnhLoss::L1 ? "l1" : "mse"; }
inline EnhLoss parse_enh_loss(std::string_view s) {
  if (s == "l1") return EnhLoss::L1;
  if (s == "mse") return EnhLoss::MSE;
  throw Error(Errc::ParseError, "unknown enhancer loss '" + std::string(s) + "'");
}

struct EnhTrainConfig {
  double segment_s = 4.0;
  int epochs = 5;
  double lr = 1e-3;
  std::size_t batch_size = 4;
  EnhLoss loss = EnhLoss::L1;  // waveform loss; the mask network always uses magnitude MSE
  std::size_t max_segments_per_epoch = 0;  // 0 = every segment each epoch
  std::uint64_t seed = 0;
};

struct EnhTrainResult {
  std::vector<double> epoch_loss;  // mean batch loss per epoch
};

/// Borrowed (noisy, clean) waveforms of equal length.
struct WavePair {
  const Waveform* noisy = nullptr;
  const Waveform* clean = nullptr;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Fits the model to map noisy segments onto their clean counterparts.
/// SpectralSubtract has no parameters and returns an empty history.
inline EnhTrainResult train_enhancer(EnhancerModel& model, const std::vector<WavePair>& pairs,
                                     const EnhTrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  EnhTrainResult result;
  if (pairs.empty()) throw Error(Errc::EmptyDataset, "no training pairs");
  if (cfg.epochs < 1 || cfg.batch_size == 0) throw Error(Errc::ConfigError, "epochs and batch size must be positive");
  model.segment_s = cfg.segment_s;
  if (model.kind == EnhancerKind::SpectralSubtract) return result;

  std::vector<std::vector<double>> noisy_segs, clean_segs;
  for (const auto& p : pairs) {
    if (p.noisy->size() != p.clean->size()) throw Error(Errc::LengthMismatch, "pair lengths differ");
    Chunked n = chunk(*p.noisy, cfg.segment_s), c = chunk(*p.clean, cfg.segment_s);
    for (std::size_t i = 0; i < n.segments.size(); ++i) {
      noisy_segs.push_back(std::move(n.segments[i]));
      clean_segs.push_back(std::move(c.segments[i]));
    }
  }
  const int rate = pairs.front().noisy->sample_rate;
  const std::size_t L = noisy_segs.front().size();
  if (model.kind == EnhancerKind::TinyWaveUNet && L % 8 != 0)
    throw Error(Errc::ConfigError, "segment length must be divisible by 8 for the U-Net");

  grad::Adam<float> opt(model.params.vars(), cfg.lr);
  std::vector<std::size_t> order(noisy_segs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = make_rng(derive_seed(cfg.seed, "enhancer-order"));
  const std::size_t per_epoch =
      cfg.max_segments_per_epoch == 0 ? order.size() : std::min(order.size(), cfg.max_segments_per_epoch);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b0 = 0; b0 < per_epoch; b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(per_epoch, b0 + cfg.batch_size);
      const std::size_t N = b1 - b0;
      grad::Var<float> loss;
      if (model.kind == EnhancerKind::TinyWaveUNet) {
        grad::Tensor<float> x({N, 1, L}), y({N, 1, L});
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t i = 0; i < L; ++i) {
            x[n * L + i] = static_cast<float>(noisy_segs[order[b0 + n]][i]);
            y[n * L + i] = static_cast<float>(clean_segs[order[b0 + n]][i]);
          }
        auto out = wave_unet_forward(model.params, grad::constant(std::move(x)));
        auto target = grad::constant(std::move(y));
        loss = cfg.loss == EnhLoss::L1 ? grad::l1(out, target) : grad::mse(out, target);
      } else {
        std::vector<const std::vector<double>*> nptr, cptr;
        for (std::size_t n = b0; n < b1; ++n) {
          nptr.push_back(&noisy_segs[order[n]]);
          cptr.push_back(&clean_segs[order[n]]);
        }
        MaskBatch noisy = mask_batch(nptr, model.stft, rate);
        grad::Tensor<float> target(noisy.magnitude.shape);
        for (std::size_t n = 0; n < N; ++n) {
          const auto cm = magnitude(stft(Waveform(*cptr[n], rate), model.stft));
          for (std::size_t i = 0; i < cm.size(); ++i) target[n * cm.size() + i] = static_cast<float>(cm[i]);
        }
        auto mask = mask_net_forward(model.params, grad::constant(noisy.features));
        auto est = grad::mul(mask, grad::constant(std::move(noisy.magnitude)));
        loss = grad::mse(est, grad::constant(std::move(target)));
      }
      const double lv = loss.value().item();
      if (!std::isfinite(lv)) throw Error(Errc::DivergenceDetected, "enhancer loss is not finite");
      opt.zero_grad();
      grad::backward(loss);
      opt.step();
      sum += lv;
      ++batches;
    }
    result.epoch_loss.push_back(sum / static_cast<double>(batches));
    if (on_epoch) on_epoch(epoch, result.epoch_loss.back());
  }
  for (const auto& v : model.params.vars())
    if (!v.value().all_finite()) throw Error(Errc::DivergenceDetected, "enhancer parameters are not finite");
  return result;
}

inline EnhTrainResult train_enhancer(EnhancerModel& model, const std::vector<NoisyPair>& pairs,
                                     const EnhTrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  std::vector<WavePair> wp;
  for (const auto& p : pairs) wp.push_back({&p.noisy.audio, &p.clean.audio});
  return train_enhancer(model, wp, cfg, on_epoch);
}

}  // namespace resp
