#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "resp/grad/tensor.hpp"
#include "resp/seed.hpp"
#include "resp/signal/waveform.hpp"

namespace resp {

/// Draws class-balanced batches of dataset indices. Each batch holds
/// batch_size / classes examples of every class; within a class the
/// examples are taken from a reshuffled cycle, so small classes repeat.
class BalancedBatchSampler {
 public:
  BalancedBatchSampler(const std::vector<RespClass>& labels, LabelMode mode, std::size_t batch_size,
                       std::uint64_t seed)
      : rng_(make_rng(derive_seed(seed, "balanced-batches"))) {
    const auto k = static_cast<std::size_t>(num_classes(mode));
    if (batch_size == 0 || batch_size % k != 0)
      throw Error(Errc::ConfigError, "batch size " + std::to_string(batch_size) + " is not a multiple of " +
                                         std::to_string(k) + " classes");
    per_class_ = batch_size / k;
    pools_.resize(k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!valid_in_mode(labels[i], mode))
        throw Error(Errc::InvalidClass, "label " + class_name(labels[i]) + " outside " + std::string(mode_name(mode)));
      pools_[static_cast<std::size_t>(class_index(labels[i]))].push_back(i);
    }
    for (std::size_t c = 0; c < k; ++c)
      if (pools_[c].empty())
        throw Error(Errc::EmptyClass, "no examples of class " + class_name(class_from_index(static_cast<int>(c), mode), mode));
    cursor_.assign(k, 0);
    for (auto& p : pools_) shuffle(p, rng_);
  }

  std::size_t per_class() const { return per_class_; }

  /// Class-major: the first per_class() entries are class 0, and so on.
  std::vector<std::size_t> next() {
    std::vector<std::size_t> out;
    out.reserve(per_class_ * pools_.size());
    for (std::size_t c = 0; c < pools_.size(); ++c)
      for (std::size_t j = 0; j < per_class_; ++j) {
        if (cursor_[c] == pools_[c].size()) {
          shuffle(pools_[c], rng_);
          cursor_[c] = 0;
        }
        out.push_back(pools_[c][cursor_[c]++]);
      }
    return out;
  }

 private:
  Rng rng_;
  std::size_t per_class_ = 0;
  std::vector<std::vector<std::size_t>> pools_;
  std::vector<std::size_t> cursor_;
};

/// One-hot rows [N, classes].
inline grad::Tensor<float> one_hot(const std::vector<RespClass>& labels, LabelMode mode) {
  const auto k = static_cast<std::size_t>(num_classes(mode));
  grad::Tensor<float> t({labels.size(), k});
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (!valid_in_mode(labels[n], mode)) throw Error(Errc::InvalidClass, "label outside mode");
    t[n * k + static_cast<std::size_t>(class_index(labels[n]))] = 1.0f;
  }
  return t;
}

struct MixedBatch {
  grad::Tensor<float> inputs;   // same shape as the input batch
  grad::Tensor<float> targets;  // [N, classes], rows sum to 1
  std::vector<std::size_t> partner;
  std::vector<double> lambda;
};

/// Mixup: row n becomes lambda_n x_n + (1 - lambda_n) x_partner(n), with
/// partners from a seeded permutation and lambda_n ~ Beta(alpha, alpha).
/// `forced_lambda` replaces every draw.
inline MixedBatch mixup(const grad::Tensor<float>& inputs, const grad::Tensor<float>& targets, double alpha,
                        std::uint64_t seed, std::optional<double> forced_lambda = std::nullopt) {
  if (inputs.rank() < 1 || targets.rank() != 2 || inputs.dim(0) != targets.dim(0))
    throw Error(Errc::ShapeMismatch, "mixup: inputs " + grad::shape_str(inputs.shape) + " targets " +
                                         grad::shape_str(targets.shape));
  if (!forced_lambda && !(alpha > 0.0)) throw Error(Errc::ConfigError, "mixup alpha must be positive");
  if (forced_lambda && !(*forced_lambda >= 0.0 && *forced_lambda <= 1.0))
    throw Error(Errc::BadRange, "mixup lambda outside [0, 1]");
  const std::size_t N = inputs.dim(0), row = inputs.size() / N, K = targets.dim(1);
  Rng rng = make_rng(seed);
  MixedBatch m;
  m.partner.resize(N);
  for (std::size_t n = 0; n < N; ++n) m.partner[n] = n;
  shuffle(m.partner, rng);
  m.lambda.resize(N);
  for (std::size_t n = 0; n < N; ++n) m.lambda[n] = forced_lambda ? *forced_lambda : beta_sample(rng, alpha, alpha);
  m.inputs = grad::Tensor<float>(inputs.shape);
  m.targets = grad::Tensor<float>(targets.shape);
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t p = m.partner[n];
    const double l = m.lambda[n];
    if (l == 1.0) {
      std::copy_n(&inputs[n * row], row, &m.inputs[n * row]);
      std::copy_n(&targets[n * K], K, &m.targets[n * K]);
      continue;
    }
    for (std::size_t i = 0; i < row; ++i)
      m.inputs[n * row + i] = static_cast<float>(l * inputs[n * row + i] + (1.0 - l) * inputs[p * row + i]);
    for (std::size_t k = 0; k < K; ++k)
      m.targets[n * K + k] = static_cast<float>(l * targets[n * K + k] + (1.0 - l) * targets[p * K + k]);
  }
  return m;
}

}  // namespace resp
