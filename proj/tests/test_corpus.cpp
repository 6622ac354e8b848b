#include "test_util.hpp"

#include <set>

#include "resp/corpus.hpp"
#include "resp/signal.hpp"

using namespace resp;
using testutil::TempDir;

namespace {

Waveform tone_clip(double hz, double amp) { return Waveform(testutil::sine(hz, 10.0, kCanonicalRate, amp), kCanonicalRate); }

Clip clean_clip(const std::string& rec, const std::string& id, RespClass label, std::uint64_t seed) {
  return assemble_clip(synth_breath(label, 3.0, seed), label, rec, id);
}

}  // namespace

TEST_CASE("cycle annotations parse per line with 1-based errors") {
  const auto cs = parse_cycle_annotations("0.036 0.579 0 0\n\n1.2\t2.5 1 1\r\n3 4 1 0\n4 5 0 1");
  REQUIRE(cs.size() == 4);
  CHECK(cs[0].start_s == 0.036);
  CHECK(cs[0].end_s == 0.579);
  CHECK(cs[0].label() == RespClass::Normal);
  CHECK(cs[1].label() == RespClass::Both);
  CHECK(cs[2].label() == RespClass::Crackle);
  CHECK(cs[3].label() == RespClass::Wheeze);
  try {
    parse_cycle_annotations("0 1 0 0\n2.5 1.2 0 0\n");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  REQUIRE_ERRC(parse_cycle_annotations("0 1 0"), Errc::ParseError);
  REQUIRE_ERRC(parse_cycle_annotations("0 1 2 0"), Errc::ParseError);
  REQUIRE_ERRC(parse_cycle_annotations("a 1 0 0"), Errc::ParseError);
  REQUIRE_ERRC(parse_cycle_annotations("-1 1 0 0"), Errc::ParseError);
}

TEST_CASE("assemble_clip tiles and truncates to exactly 10 s") {
  std::vector<double> three(48000);
  for (std::size_t i = 0; i < three.size(); ++i) three[i] = static_cast<double>(i) / 48000.0;
  const Clip c = assemble_clip(Waveform(three, kCanonicalRate), RespClass::Wheeze, "r", "c");
  REQUIRE(c.audio.size() == kClipSamples);
  for (std::size_t i = 0; i < kClipSamples; ++i) REQUIRE(c.audio[i] == three[i % 48000]);
  CHECK(c.label == RespClass::Wheeze);
  CHECK(c.condition == Condition::Clean);

  const auto ten = testutil::random_signal(kClipSamples, 1);
  CHECK(assemble_clip(Waveform(ten, kCanonicalRate), RespClass::Normal).audio.samples == ten);
  const auto twelve = testutil::random_signal(192000, 2);
  const auto t = assemble_clip(Waveform(twelve, kCanonicalRate), RespClass::Normal).audio.samples;
  CHECK(std::equal(t.begin(), t.end(), twelve.begin()));
  CHECK(assemble_clip(Waveform({0.3}, kCanonicalRate), RespClass::Normal).audio.size() == kClipSamples);
  REQUIRE_ERRC(assemble_clip(Waveform({}, kCanonicalRate), RespClass::Normal), Errc::EmptyCycle);
  REQUIRE_ERRC(assemble_clip(Waveform({0.1}, 8000), RespClass::Normal), Errc::InvalidArgument);
}

TEST_CASE("cycle_audio cuts the annotated span") {
  const Waveform rec(testutil::random_signal(32000, 4), kCanonicalRate);
  const auto cyc = cycle_audio(rec, {0.5, 1.0, false, false});
  REQUIRE(cyc.size() == 8000);
  CHECK(cyc[0] == rec[8000]);
}

TEST_CASE("split_dataset partitions by recording, deterministically") {
  std::vector<Clip> clips;
  for (int r = 0; r < 10; ++r)
    for (int k = 0; k < 3; ++k) {
      const auto label = class_from_index(r % 3, LabelMode::Fabs3);
      clips.push_back(clean_clip("rec" + std::to_string(r), "rec" + std::to_string(r) + "-" + std::to_string(k), label,
                                 static_cast<std::uint64_t>(r * 10 + k)));
    }
  SplitSpec spec;
  spec.seed = 9;
  const auto [train, test] = split_dataset(clips, spec);
  std::set<std::string> tr_rec, te_rec, ids;
  for (const auto& c : train) {
    tr_rec.insert(c.source_id);
    ids.insert(c.clip_id);
    CHECK(c.partition == Partition::Train);
  }
  for (const auto& c : test) {
    te_rec.insert(c.source_id);
    CHECK(ids.insert(c.clip_id).second);
    CHECK(c.partition == Partition::Test);
  }
  CHECK(tr_rec.size() == 8);
  CHECK(te_rec.size() == 2);
  CHECK(ids.size() == clips.size());
  for (const auto& r : te_rec) CHECK(tr_rec.count(r) == 0);

  const auto again = split_dataset(clips, spec);
  REQUIRE(again.second.size() == test.size());
  for (std::size_t i = 0; i < test.size(); ++i) CHECK(again.second[i].clip_id == test[i].clip_id);

  SplitSpec other = spec;
  other.seed = 10;
  bool differs = false;
  for (std::uint64_t s = 10; s < 20 && !differs; ++s) {
    other.seed = s;
    const auto o = split_dataset(clips, other);
    std::set<std::string> r;
    for (const auto& c : o.second) r.insert(c.source_id);
    differs = r != te_rec;
  }
  CHECK(differs);

  std::vector<Clip> one_rec(clips.begin(), clips.begin() + 3);
  REQUIRE_ERRC(split_dataset(one_rec, spec), Errc::TooFewGroups);
  SplitSpec bad = spec;
  bad.train_fraction = 1.0;
  REQUIRE_ERRC(split_dataset(clips, bad), Errc::InvalidArgument);
}

TEST_CASE("split keeps every class with two or more groups on both sides") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::vector<SplitKey> keys;
    for (int g = 0; g < 20; ++g) keys.push_back({"g" + std::to_string(g), class_from_index(g % 3, LabelMode::Fabs3)});
    SplitSpec spec;
    spec.seed = seed;
    const auto idx = split_indices(keys, spec);
    for (int c = 0; c < 3; ++c) {
      bool tr = false, te = false;
      for (auto i : idx.train) tr |= class_index(keys[i].label) == c;
      for (auto i : idx.test) te |= class_index(keys[i].label) == c;
      CHECK(tr);
      CHECK(te);
    }
  }
}

TEST_CASE("split by clip groups each clip alone") {
  std::vector<Clip> clips;
  for (int k = 0; k < 10; ++k)
    clips.push_back(clean_clip("rec0", "c" + std::to_string(k), RespClass::Normal, static_cast<std::uint64_t>(k)));
  SplitSpec spec;
  spec.group_by = GroupBy::Clip;
  const auto [train, test] = split_dataset(clips, spec);
  CHECK(train.size() == 8);
  CHECK(test.size() == 2);
}

TEST_CASE("mix_at_snr hits every grid SNR exactly") {
  std::vector<double> grid = default_train_snrs();
  grid.insert(grid.end(), default_test_snrs().begin(), default_test_snrs().end());
  for (int p = 0; p < 20; ++p) {
    const Waveform clean(testutil::random_signal(kClipSamples, 100 + p, 0.3), kCanonicalRate);
    const Waveform noise(testutil::random_signal(50000 + 1000 * p, 200 + p, 0.8), kCanonicalRate);
    for (double snr : grid) {
      const auto m = mix_at_snr(clean, noise, snr, static_cast<std::uint64_t>(p));
      REQUIRE(m.noisy.size() == clean.size());
      REQUIRE(m.shift_samples < noise.size());
      std::vector<double> added(clean.size());
      for (std::size_t i = 0; i < added.size(); ++i) added[i] = m.noisy[i] - clean[i];
      // The achieved SNR uses the exact scaled segment, not the float difference.
      auto seg = noise_segment(noise.samples, m.shift_samples, clean.size());
      for (auto& v : seg) v *= m.gain;
      REQUIRE(std::abs(measured_snr_db(clean.samples, seg) - snr) <= 1e-6);
      for (std::size_t i = 0; i < added.size(); ++i) REQUIRE(std::abs(added[i] - seg[i]) <= 1e-12);
    }
  }
}

TEST_CASE("mix_at_snr gain formula, high-SNR residual and errors") {
  const Waveform clean(std::vector<double>(1000, 0.1), kCanonicalRate);
  const Waveform noise(std::vector<double>(1000, 0.2), kCanonicalRate);
  CHECK(mix_at_snr(clean, noise, 0.0, 1).gain == Catch::Approx(0.5));

  const Waveform c2 = tone_clip(300.0, 0.5);
  const Waveform n2(testutil::random_signal(30000, 3), kCanonicalRate);
  const auto m = mix_at_snr(c2, n2, 60.0, 4);
  std::vector<double> diff(c2.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = m.noisy[i] - c2[i];
  CHECK(rms(diff) == Catch::Approx(rms(c2) * 1e-3).epsilon(1e-9));

  REQUIRE_ERRC(mix_at_snr(Waveform::zeros(100), n2, 5.0, 1), Errc::SilentInput);
  REQUIRE_ERRC(mix_at_snr(c2, Waveform::zeros(100), 5.0, 1), Errc::SilentInput);
  REQUIRE_ERRC(mix_at_snr(c2, Waveform({}, kCanonicalRate), 5.0, 1), Errc::SilentInput);
  CHECK(mix_at_snr(c2, n2, 5.0, 7).noisy == mix_at_snr(c2, n2, 5.0, 7).noisy);
}

TEST_CASE("noise library sizes and disjoint train/test instances") {
  const auto lib = build_noise_library(NoiseLibraryConfig{}, 3);
  CHECK(lib.items.size() == 38);
  for (NoiseKind k : kAllNoiseKinds) {
    const auto tr = lib.select(Partition::Train, k), te = lib.select(Partition::Test, k);
    CHECK(tr.size() + te.size() == static_cast<std::size_t>(default_library_size(k)));
    CHECK_FALSE(tr.empty());
    CHECK_FALSE(te.empty());
    for (auto* a : tr)
      for (auto* b : te) CHECK(a->id() != b->id());
  }
  NoiseLibraryConfig tiny;
  tiny.friction = 1;
  REQUIRE_ERRC(build_noise_library(tiny, 1), Errc::EmptyNoiseLibrary);
}

TEST_CASE("build_condition_set draws from its grid and noise side only") {
  NoiseLibraryConfig nc;
  nc.duration_s = 2.0;
  const auto lib = build_noise_library(nc, 5);
  std::vector<Clip> clips;
  for (int i = 0; i < 12; ++i)
    clips.push_back(clean_clip("r" + std::to_string(i), "c" + std::to_string(i), RespClass::Normal,
                               static_cast<std::uint64_t>(i)));
  const auto train = build_condition_set(clips, lib.select(Partition::Train), default_train_snrs(), 1);
  const auto test = build_condition_set(clips, lib.select(Partition::Test), default_test_snrs(), 1);
  REQUIRE(train.size() == clips.size());
  std::set<std::string> tr_noise, te_noise;
  for (const auto& p : train) {
    REQUIRE(p.noisy.noise.has_value());
    CHECK(p.noisy.noise->partition == Partition::Train);
    CHECK(std::count(default_train_snrs().begin(), default_train_snrs().end(), p.noisy.noise->snr_db) == 1);
    CHECK(p.clean.source_id == p.noisy.source_id);
    CHECK(p.clean.label == p.noisy.label);
    CHECK(p.noisy.condition == Condition::Noisy);
    p.noisy.validate();
    tr_noise.insert(p.noisy.noise->noise_id);
  }
  for (const auto& p : test) {
    CHECK(std::count(default_test_snrs().begin(), default_test_snrs().end(), p.noisy.noise->snr_db) == 1);
    te_noise.insert(p.noisy.noise->noise_id);
  }
  for (const auto& id : te_noise) CHECK(tr_noise.count(id) == 0);

  // Bitwise reconstruction of the noisy clip from its metadata.
  const auto& p = train.front();
  const NoiseInstance* inst = nullptr;
  for (const auto& it : lib.items)
    if (it.id() == p.noisy.noise->noise_id) inst = &it;
  REQUIRE(inst != nullptr);
  const auto seg = noise_segment(inst->audio.samples, p.noisy.noise->shift_samples, kClipSamples);
  for (std::size_t i = 0; i < kClipSamples; ++i) REQUIRE(p.noisy.audio[i] == p.clean.audio[i] + p.noisy.noise->gain * seg[i]);

  const auto all = build_condition_set(clips, lib.select(Partition::Train), default_train_snrs(), 1, SnrDraw::AllPerClip);
  CHECK(all.size() == clips.size() * 4);
  // A clip's draw does not depend on the other clips.
  const auto solo = build_condition_set({clips[3]}, lib.select(Partition::Train), default_train_snrs(), 1);
  CHECK(solo.front().noisy.audio == train[3].noisy.audio);
  REQUIRE_ERRC(build_condition_set(clips, {}, default_train_snrs(), 1), Errc::EmptyNoiseLibrary);
}

TEST_CASE("synthetic corpus is balanced and deterministic") {
  SynthCorpusConfig cfg;
  cfg.clips = 30;
  cfg.clips_per_recording = 2;
  const auto a = synth_corpus(cfg, 4);
  REQUIRE(a.size() == 30);
  int counts[3] = {0, 0, 0};
  for (const auto& c : a) {
    c.validate();
    ++counts[class_index(c.label)];
  }
  CHECK(counts[0] == 10);
  CHECK(counts[1] == 10);
  CHECK(counts[2] == 10);
  const auto b = synth_corpus(cfg, 4);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].audio == b[i].audio);
  CHECK(apply_tag_filter(a, accept_all()).size() == a.size());
  CHECK(apply_tag_filter(a, [](const Waveform&) { return false; }).empty());
}

TEST_CASE("manifest records round trip through line-delimited JSON") {
  TempDir dir("manifest");
  NoiseLibraryConfig nc;
  nc.duration_s = 1.0;
  const auto lib = build_noise_library(nc, 1);
  const Clip c = clean_clip("rec1", "rec1-c0", RespClass::Crackle, 3);
  const Clip n = make_noisy_clip(c, lib.items.front(), 5.0, 2);
  std::vector<ManifestRecord> recs{manifest_record(c, LabelMode::Fabs3, "a.wav"),
                                   manifest_record(n, LabelMode::Fabs3, "b.wav")};
  write_manifest(recs, dir / "m.jsonl");
  const auto back = read_manifest(dir / "m.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].condition == "clean");
  CHECK_FALSE(back[0].noise_kind.has_value());
  CHECK(back[1].noise_kind == noise_kind_name(lib.items.front().kind));
  CHECK(back[1].snr_db == 5.0);
  CHECK(back[1].shift == n.noise->shift_samples);
  CHECK(back[1].path == "b.wav");
  write_file_bytes(dir / "bad.jsonl", "{\"x\":1}\n");
  REQUIRE_ERRC(read_manifest(dir / "bad.jsonl"), Errc::ParseError);
}

TEST_CASE("provenance audit flags training reads of test-side items") {
  ProvenanceAudit audit;
  Clip tr = clean_clip("r", "train-clip", RespClass::Normal, 1);
  Clip te = tr;
  te.clip_id = "test-clip";
  te.partition = Partition::Test;
  audit.read(Phase::TrainClassifier, tr);
  audit.read(Phase::Evaluate, te);
  REQUIRE_NOTHROW(audit.assert_no_leakage());
  audit.read(Phase::TrainEnhancer, te);
  CHECK(audit.violations().size() == 1);
  REQUIRE_ERRC(audit.assert_no_leakage(), Errc::LeakageDetected);

  ProvenanceAudit noise_audit;
  NoiseInstance inst;
  inst.partition = Partition::Test;
  noise_audit.read(Phase::TrainClassifier, inst);
  REQUIRE_ERRC(noise_audit.assert_no_leakage(), Errc::LeakageDetected);
}
