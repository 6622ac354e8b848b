#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "resp/classify/batching.hpp"
#include "resp/classify/model.hpp"
#include "resp/classify/triplet.hpp"

namespace resp {

struct ClfTrainConfig {
  std::size_t batch_size = 15;  // must be a multiple of the class count; 32 at full scale
  double lr = 3e-3;              // 1e-4 at full scale
  std::size_t iterations = 300;  // desk budget; 14000 at full scale
  double lambda_triplet = 0.01;
  double margin = 0.3;
  double mixup_alpha = 0.2;
  bool use_mixup = true;
  bool use_spec_augment = true;
  SpecAugmentPolicy spec_augment;  // widths in unpooled log-mel frames
  std::uint64_t seed = 0;

  void validate(LabelMode mode) const {
    const auto k = static_cast<std::size_t>(num_classes(mode));
    if (batch_size == 0 || batch_size % k != 0)
      throw Error(Errc::ConfigError, "batch size must be a positive multiple of the class count");
    if (!(lambda_triplet >= 0.0)) throw Error(Errc::ConfigError, "lambda_triplet must be nonnegative");
    if (!(margin >= 0.0)) throw Error(Errc::ConfigError, "margin must be nonnegative");
    if (use_mixup && !(mixup_alpha > 0.0)) throw Error(Errc::ConfigError, "mixup alpha must be positive");
    if (!(lr > 0.0)) throw Error(Errc::ConfigError, "learning rate must be positive");
  }
};

/// total == cross_entropy + lambda * triplet, evaluated in double.
struct LossBreakdown {
  double total = 0.0;
  double cross_entropy = 0.0;
  double triplet = 0.0;
};

inline LossBreakdown make_breakdown(double ce, double triplet, double lambda) {
  return {ce + lambda * triplet, ce, triplet};
}

/// Classifier inputs (time-pooled log-mel, unstandardized) and labels.
struct ClfDataset {
  LabelMode mode = LabelMode::Fabs3;
  std::vector<MelSpec> features;
  std::vector<RespClass> labels;

  std::size_t size() const { return features.size(); }
};

using IterationCallback = std::function<void(std::size_t, const LossBreakdown&)>;

namespace classifier_detail {

// SpecAugment on each row of a standardized batch [N, 1, mels, frames].
inline void augment_rows(grad::Tensor<float>& x, const SpecAugmentPolicy& p, std::uint64_t seed) {
  const std::size_t N = x.dim(0), M = x.dim(2), F = x.dim(3);
  MelSpec m;
  m.n_mels = M;
  m.frames = F;
  m.data.resize(M * F);
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(&x[n * M * F], M * F, m.data.begin());
    const MelSpec a = spec_augment(m, p, derive_seed(seed, "row", std::to_string(n)));
    for (std::size_t i = 0; i < M * F; ++i) x[n * M * F + i] = static_cast<float>(a.data[i]);
  }
}

}  // namespace classifier_detail

/// Trains `model` in place: fits the input standardization on the dataset,
/// then per iteration draws a balanced batch, mixes it, applies SpecAugment,
/// and takes one Adam step on CE(mixed) + lambda * triplet(un-mixed).
/// Returns one LossBreakdown per iteration.
inline std::vector<LossBreakdown> train_classifier(ClassifierModel& model, const ClfDataset& data,
                                                   const ClfTrainConfig& cfg, const IterationCallback& cb = {}) {
  cfg.validate(model.mode);
  if (data.mode != model.mode) throw Error(Errc::ConfigError, "dataset and model label modes differ");
  if (data.features.size() != data.labels.size()) throw Error(Errc::LengthMismatch, "features and labels differ");
  if (data.features.empty()) throw Error(Errc::EmptyDataset, "no training examples");

  std::vector<const MelSpec*> all;
  for (const auto& f : data.features) all.push_back(&f);
  std::tie(model.input_mean, model.input_std) = feature_stats(all);

  BalancedBatchSampler sampler(data.labels, data.mode, cfg.batch_size, cfg.seed);
  SpecAugmentPolicy policy = cfg.spec_augment;
  policy.max_time_width = (policy.max_time_width + model.time_pool - 1) / model.time_pool;
  grad::Adam<float> opt(model.params.vars(), cfg.lr);

  std::vector<LossBreakdown> history;
  history.reserve(cfg.iterations);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const std::string key = std::to_string(it);
    const auto idx = sampler.next();
    const std::size_t N = idx.size();
    std::vector<const MelSpec*> feats;
    std::vector<RespClass> labels;
    std::vector<int> label_ids;
    for (std::size_t i : idx) {
      feats.push_back(&data.features[i]);
      labels.push_back(data.labels[i]);
      label_ids.push_back(class_index(data.labels[i]));
    }
    const grad::Tensor<float> x = feature_batch(feats, model);
    const grad::Tensor<float> y = one_hot(labels, model.mode);

    MixedBatch mixed = cfg.use_mixup ? mixup(x, y, cfg.mixup_alpha, derive_seed(cfg.seed, "mixup", key))
                                     : mixup(x, y, 1.0, 0, 1.0);
    if (cfg.use_spec_augment)
      classifier_detail::augment_rows(mixed.inputs, policy, derive_seed(cfg.seed, "specaugment", key));

    // One pass over [mixed-augmented; un-mixed] so both terms share weights.
    grad::Shape shape = x.shape;
    shape[0] = 2 * N;
    grad::Tensor<float> both(shape);
    std::copy(mixed.inputs.data.begin(), mixed.inputs.data.end(), both.data.begin());
    std::copy(x.data.begin(), x.data.end(), both.data.begin() + static_cast<std::ptrdiff_t>(x.size()));
    const auto out = classifier_forward(model.params, grad::constant(std::move(both)));
    const auto ce = grad::cross_entropy(grad::slice_rows(out.logits, 0, N), mixed.targets);
    const auto tri = triplet_loss(grad::slice_rows(out.embedding, N, 2 * N), label_ids, cfg.margin);
    const auto total = grad::add(ce, grad::scale(tri, static_cast<float>(cfg.lambda_triplet)));

    const LossBreakdown lb = make_breakdown(ce.value()[0], tri.value()[0], cfg.lambda_triplet);
    if (!std::isfinite(lb.total))
      throw Error(Errc::DivergenceDetected, "classifier loss is not finite at iteration " + key);
    opt.zero_grad();
    grad::backward(total);
    opt.step();
    history.push_back(lb);
    if (cb) cb(it, lb);
  }
  return history;
}

struct Prediction {
  std::vector<double> probabilities;
  std::vector<double> embedding;
  RespClass predicted = RespClass::Normal;
};

/// Inference in batches of `batch`; pure in the model and inputs.
inline std::vector<Prediction> predict_batch(const ClassifierModel& model, const std::vector<const MelSpec*>& feats,
                                             std::size_t batch = 32) {
  std::vector<Prediction> out;
  out.reserve(feats.size());
  grad::NoGradGuard ng;
  const std::size_t K = model.classes();
  for (std::size_t b = 0; b < feats.size(); b += batch) {
    const std::size_t e = std::min(feats.size(), b + batch);
    std::vector<const MelSpec*> part(feats.begin() + static_cast<std::ptrdiff_t>(b),
                                     feats.begin() + static_cast<std::ptrdiff_t>(e));
    const auto res = classifier_forward(model.params, grad::constant(feature_batch(part, model)));
    const auto& logits = res.logits.value();
    const auto& emb = res.embedding.value();
    for (std::size_t n = 0; n < part.size(); ++n) {
      Prediction p;
      double mx = logits[n * K];
      std::size_t arg = 0;
      for (std::size_t k = 1; k < K; ++k)
        if (logits[n * K + k] > mx) {
          mx = logits[n * K + k];
          arg = k;
        }
      double s = 0.0;
      p.probabilities.resize(K);
      for (std::size_t k = 0; k < K; ++k) s += p.probabilities[k] = std::exp(double(logits[n * K + k]) - mx);
      for (auto& v : p.probabilities) v /= s;
      p.embedding.assign(emb.data.begin() + static_cast<std::ptrdiff_t>(n * kEmbeddingDim),
                         emb.data.begin() + static_cast<std::ptrdiff_t>((n + 1) * kEmbeddingDim));
      p.predicted = class_from_index(static_cast<int>(arg), model.mode);
      out.push_back(std::move(p));
    }
  }
  return out;
}

inline Prediction predict(const ClassifierModel& model, const MelSpec& features) {
  return predict_batch(model, {&features}).front();
}

}  // namespace resp
