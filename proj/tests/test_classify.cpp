#include "test_util.hpp"

#include <map>
#include <set>

#include "resp/classify.hpp"
#include "resp/enhance.hpp"
#include "resp/signal.hpp"

using namespace resp;
using namespace resp::grad;

namespace {

// Class c lights up its own block of mel bands, plus noise.
ClfDataset separable_dataset(std::size_t per_class, LabelMode mode, std::uint64_t seed) {
  ClfDataset d;
  d.mode = mode;
  Rng rng = make_rng(seed);
  const int k = num_classes(mode);
  for (int c = 0; c < k; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      MelSpec m;
      m.n_mels = 64;
      m.frames = 16;
      m.data.resize(64 * 16);
      for (std::size_t r = 0; r < 64; ++r)
        for (std::size_t t = 0; t < 16; ++t)
          m.at(r, t) = uniform(rng, -1.0, 1.0) + (r / 16 == static_cast<std::size_t>(c) ? 3.0 : 0.0);
      d.features.push_back(std::move(m));
      d.labels.push_back(class_from_index(c, mode));
    }
  return d;
}

Var<float> emb(std::vector<float> v, std::size_t n) {
  const std::size_t d = v.size() / n;
  return parameter(Tensor<float>({n, d}, std::move(v)));
}

}  // namespace

TEST_CASE("balanced batches hold batch/classes of every class") {
  std::vector<RespClass> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(RespClass::Normal);
  for (int i = 0; i < 7; ++i) labels.push_back(RespClass::Crackle);
  for (int i = 0; i < 2; ++i) labels.push_back(RespClass::Wheeze);
  for (int i = 0; i < 3; ++i) labels.push_back(RespClass::Both);
  BalancedBatchSampler s(labels, LabelMode::Icbhi4, 16, 5);
  BalancedBatchSampler same(labels, LabelMode::Icbhi4, 16, 5);
  std::set<std::size_t> wheeze_seen;
  for (int b = 0; b < 100; ++b) {
    const auto idx = s.next();
    REQUIRE(idx.size() == 16);
    REQUIRE(idx == same.next());
    int counts[4] = {0, 0, 0, 0};
    for (auto i : idx) ++counts[class_index(labels[i])];
    for (int c : counts) REQUIRE(c == 4);
    for (auto i : idx)
      if (labels[i] == RespClass::Wheeze) wheeze_seen.insert(i);
  }
  CHECK(wheeze_seen.size() == 2);
  REQUIRE_ERRC(BalancedBatchSampler(labels, LabelMode::Icbhi4, 15, 1), Errc::ConfigError);
  std::vector<RespClass> no_wheeze(labels.begin(), labels.begin() + 47);
  REQUIRE_ERRC(BalancedBatchSampler(no_wheeze, LabelMode::Icbhi4, 16, 1), Errc::EmptyClass);
  REQUIRE_ERRC(BalancedBatchSampler(labels, LabelMode::Fabs3, 15, 1), Errc::InvalidClass);
}

TEST_CASE("mixup arithmetic") {
  Tensor<float> x({2, 2}, std::vector<float>{1, 2, 3, 4});
  const auto y = one_hot({RespClass::Crackle, RespClass::Normal}, LabelMode::Fabs3);
  const auto id = mixup(x, y, 0.2, 1, 1.0);
  CHECK(id.inputs == x);
  CHECK(id.targets == y);

  const auto half = mixup(x, y, 0.2, 3, 0.5);
  for (std::size_t n = 0; n < 2; ++n) {
    const std::size_t p = half.partner[n];
    for (std::size_t i = 0; i < 2; ++i) CHECK(half.inputs[n * 2 + i] == Catch::Approx(0.5 * (x[n * 2 + i] + x[p * 2 + i])));
    if (p != n) {
      CHECK(half.targets[n * 3 + 0] == Catch::Approx(0.5));
      CHECK(half.targets[n * 3 + class_index(RespClass::Crackle)] == Catch::Approx(0.5));
    }
  }

  Tensor<float> big = Tensor<float>::zeros({30, 4});
  std::vector<RespClass> ls;
  for (int i = 0; i < 30; ++i) ls.push_back(class_from_index(i % 3, LabelMode::Fabs3));
  const auto m = mixup(big, one_hot(ls, LabelMode::Fabs3), 0.2, 9);
  for (std::size_t n = 0; n < 30; ++n) {
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k) s += m.targets[n * 3 + k];
    REQUIRE(s == Catch::Approx(1.0).epsilon(1e-6));
    REQUIRE(m.lambda[n] >= 0.0);
    REQUIRE(m.lambda[n] <= 1.0);
  }
  CHECK(mixup(big, one_hot(ls, LabelMode::Fabs3), 0.2, 9).lambda == m.lambda);
  REQUIRE_ERRC(mixup(x, y, 0.0, 1), Errc::ConfigError);
  REQUIRE_ERRC(mixup(x, y, 0.2, 1, 1.5), Errc::BadRange);
  REQUIRE_ERRC(mixup(x, Tensor<float>({3, 3}), 0.2, 1), Errc::ShapeMismatch);
}

TEST_CASE("triplet loss examples") {
  // a=(0), p=(0), n=(sqrt 2): d(a,p)=0, d(a,n)=2, margin 1 -> 0 for a and p;
  // n has no positive.
  CHECK(triplet_loss(emb({0.0f, 0.0f, std::sqrt(2.0f)}, 3), {0, 0, 1}, 1.0).value().item() == 0.0f);
  // Unit square, classes on opposite edges: every anchor has d(a,p)=1 and
  // d(a,n)=1 (squared), so margin 0.5 leaves 0.5 per anchor.
  const auto l = triplet_loss(emb({0, 0, 1, 0, 0, 1, 1, 1}, 4), {0, 0, 1, 1}, 0.5);
  CHECK(l.value().item() == Catch::Approx(0.5));
  CHECK(triplet_loss(emb({0.0f, 1.0f, 2.0f}, 3), {1, 1, 1}, 0.5).value().item() == 0.0f);
  CHECK(triplet_loss(emb({0.0f, 0.0f, 5.0f, 5.0f}, 4), {0, 0, 1, 1}, 0.0).value().item() == 0.0f);
  REQUIRE_ERRC(triplet_loss(emb({0.0f, 1.0f}, 2), {0}, 0.5), Errc::ShapeMismatch);
  REQUIRE_ERRC(triplet_loss(emb({0.0f, 1.0f}, 2), {0, 1}, -1.0), Errc::BadRange);
}

TEST_CASE("classifier shapes and parameter count") {
  const auto m3 = build_classifier(LabelMode::Fabs3, 1);
  const auto m4 = build_classifier(LabelMode::Icbhi4, 1);
  const std::size_t convs = (16 * 1 * 9 + 16) + (32 * 16 * 9 + 32) + (64 * 32 * 9 + 64);
  CHECK(m3.params.element_count() == convs + 64 * 3 + 3);
  CHECK(m4.params.element_count() == convs + 64 * 4 + 4);
  const auto out = classifier_forward(m4.params, constant(Tensor<float>({2, 1, 64, 16}, 0.5f)));
  CHECK(out.embedding.shape() == Shape{2, kEmbeddingDim});
  CHECK(out.logits.shape() == Shape{2, 4});
}

TEST_CASE("classifier features for a 10 s clip") {
  const auto m = build_classifier(LabelMode::Fabs3, 0);
  const auto f = classifier_features(Waveform(testutil::random_signal(160000, 1), kCanonicalRate), m);
  CHECK(f.n_mels == 64);
  CHECK(f.frames == (1001 + 7) / 8);
}

TEST_CASE("training separates separable features; lambda 0 gives pure CE") {
  const auto data = separable_dataset(20, LabelMode::Fabs3, 3);
  auto m = build_classifier(LabelMode::Fabs3, 4);
  ClfTrainConfig cfg;
  cfg.iterations = 150;
  cfg.seed = 5;
  std::size_t calls = 0;
  const auto hist = train_classifier(m, data, cfg, [&](std::size_t, const LossBreakdown&) { ++calls; });
  CHECK(hist.size() == 150);
  CHECK(calls == 150);
  for (const auto& h : hist) REQUIRE(h.total == h.cross_entropy + 0.01 * h.triplet);

  std::vector<const MelSpec*> feats;
  for (const auto& f : data.features) feats.push_back(&f);
  const auto preds = predict_batch(m, feats);
  std::size_t right = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    double s = 0.0;
    for (double p : preds[i].probabilities) s += p;
    REQUIRE(std::abs(s - 1.0) <= 1e-9);
    right += preds[i].predicted == data.labels[i];
  }
  CHECK(static_cast<double>(right) / static_cast<double>(preds.size()) >= 0.95);

  auto m0 = build_classifier(LabelMode::Fabs3, 4);
  ClfTrainConfig zero = cfg;
  zero.lambda_triplet = 0.0;
  zero.iterations = 5;
  for (const auto& h : train_classifier(m0, data, zero)) REQUIRE(h.total == h.cross_entropy);
}

TEST_CASE("training is deterministic per seed") {
  const auto data = separable_dataset(6, LabelMode::Icbhi4, 1);
  auto a = build_classifier(LabelMode::Icbhi4, 2), b = build_classifier(LabelMode::Icbhi4, 2);
  ClfTrainConfig cfg;
  cfg.batch_size = 8;
  cfg.iterations = 10;
  const auto ha = train_classifier(a, data, cfg), hb = train_classifier(b, data, cfg);
  for (std::size_t i = 0; i < ha.size(); ++i) REQUIRE(ha[i].total == hb[i].total);
  CHECK(a.params.values_equal(b.params));
}

TEST_CASE("training preconditions") {
  auto m = build_classifier(LabelMode::Fabs3, 0);
  ClfTrainConfig cfg;
  cfg.iterations = 1;
  ClfDataset empty;
  REQUIRE_ERRC(train_classifier(m, empty, cfg), Errc::EmptyDataset);
  auto data = separable_dataset(3, LabelMode::Fabs3, 0);
  ClfTrainConfig bad = cfg;
  bad.batch_size = 16;
  REQUIRE_ERRC(train_classifier(m, data, bad), Errc::ConfigError);
  bad = cfg;
  bad.lambda_triplet = -1.0;
  REQUIRE_ERRC(train_classifier(m, data, bad), Errc::ConfigError);
  data.labels.pop_back();
  REQUIRE_ERRC(train_classifier(m, data, cfg), Errc::LengthMismatch);
  auto missing = separable_dataset(3, LabelMode::Fabs3, 0);
  for (auto& l : missing.labels)
    if (l == RespClass::Wheeze) l = RespClass::Crackle;
  REQUIRE_ERRC(train_classifier(m, missing, cfg), Errc::EmptyClass);
  auto four = separable_dataset(3, LabelMode::Icbhi4, 0);
  REQUIRE_ERRC(train_classifier(m, four, cfg), Errc::ConfigError);
}

TEST_CASE("prediction is pure and argmax follows the logits") {
  const auto data = separable_dataset(2, LabelMode::Fabs3, 8);
  const auto m = build_classifier(LabelMode::Fabs3, 3);
  const auto a = predict(m, data.features[0]);
  const auto b = predict(m, data.features[0]);
  CHECK(a.probabilities == b.probabilities);
  CHECK(a.embedding == b.embedding);
  CHECK(a.embedding.size() == kEmbeddingDim);
  std::vector<const MelSpec*> feats;
  for (const auto& f : data.features) feats.push_back(&f);
  const auto batched = predict_batch(m, feats, 4);
  // GEMM and GEMV round differently, so batch size moves the last float bits.
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(batched[0].probabilities[k] - a.probabilities[k]) < 1e-5);
  CHECK(predict_batch(m, feats, 4)[3].probabilities == batched[3].probabilities);
  for (const auto& p : batched) {
    const auto arg = std::max_element(p.probabilities.begin(), p.probabilities.end()) - p.probabilities.begin();
    CHECK(class_index(p.predicted) == arg);
  }
}

TEST_CASE("classifier checkpoints reload bit-exactly") {
  auto m = build_classifier(LabelMode::Icbhi4, 6, 4);
  m.input_mean.assign(64, 0.25f);
  m.input_std.assign(64, 2.0f);
  m.features.fmin = 50.0;
  const auto back = decode_classifier(encode_classifier(m));
  CHECK(back.mode == LabelMode::Icbhi4);
  CHECK(back.time_pool == 4);
  CHECK(back.features.fmin == 50.0);
  CHECK(back.features.stft == m.features.stft);
  CHECK(back.input_mean == m.input_mean);
  CHECK(back.input_std == m.input_std);
  CHECK(back.params.values_equal(m.params));
  REQUIRE_ERRC(decode_classifier(encode_enhancer(build_enhancer(EnhancerKind::TinyMaskNet, 0))), Errc::ParseError);
}
