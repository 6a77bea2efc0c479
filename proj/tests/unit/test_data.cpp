#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "common/parallel.hpp"
#include "data/manifest.hpp"
#include "data/segment.hpp"
#include "data/synth.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mmae::data;
using mmae::Error;
using mmae::ErrorCode;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an mmae::Error";
  return ErrorCode::Config;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("mmae_data_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

EcgRecord random_record(std::size_t leads, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> sig(leads * samples);
  for (auto& v : sig) v = n(rng);
  auto r = make_record("rec" + std::to_string(seed), leads, samples, 250, std::move(sig));
  r.label = Label::Normal;
  return r;
}

SynthConfig small_synth(std::uint64_t seed) {
  SynthConfig c;
  c.fs = 250;
  c.duration = 4.8;
  c.leads = default_lead_amplitudes(3);
  c.seed = seed;
  return c;
}

TEST(Record, EcgbRoundTripIsBitwise) {
  TempDir dir;
  auto r = random_record(3, 50, 1);
  r.label = Label::Abnormal;
  r.point_mask = std::vector<std::uint8_t>(150, 0);
  (*r.point_mask)[7] = 1;
  save_record(r, dir.path() / "a.ecgb");
  auto back = load_record(dir.path() / "a.ecgb");
  EXPECT_EQ(back.signal, r.signal);
  EXPECT_EQ(back.id, r.id);
  EXPECT_EQ(back.fs, r.fs);
  EXPECT_EQ(back.label, Label::Abnormal);
  ASSERT_TRUE(back.point_mask);
  EXPECT_EQ(*back.point_mask, *r.point_mask);
}

TEST(Record, BadMagicIsFormatError) {
  TempDir dir;
  save_record(random_record(2, 10, 2), dir.path() / "a.ecgb");
  {
    std::fstream f(dir.path() / "a.ecgb", std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  EXPECT_EQ(code_of([&] { load_record(dir.path() / "a.ecgb"); }), ErrorCode::Format);
}

TEST(Record, TruncatedPayloadIsCorruption) {
  TempDir dir;
  save_record(random_record(2, 10, 3), dir.path() / "a.ecgb");
  fs::resize_file(dir.path() / "a.ecgb", fs::file_size(dir.path() / "a.ecgb") - 4);
  EXPECT_EQ(code_of([&] { load_record(dir.path() / "a.ecgb"); }), ErrorCode::Corruption);
}

TEST(Record, UnsupportedVersionIsFormatError) {
  TempDir dir;
  save_record(random_record(2, 10, 4), dir.path() / "a.ecgb");
  {
    std::fstream f(dir.path() / "a.ecgb", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const char v[2] = {9, 0};
    f.write(v, 2);
  }
  EXPECT_EQ(code_of([&] { load_record(dir.path() / "a.ecgb"); }), ErrorCode::Format);
}

TEST(Record, CsvAndEcgbAgree) {
  TempDir dir;
  auto r = synth_normal(small_synth(5));
  save_record(r, dir.path() / "a.ecgb");
  save_record_csv(r, dir.path() / "b.csv");
  auto a = load_record(dir.path() / "a.ecgb");
  auto b = load_record(dir.path() / "b.csv");
  EXPECT_EQ(a.signal, b.signal);
  EXPECT_EQ(a.fs, b.fs);
  EXPECT_EQ(a.label, b.label);
  EXPECT_EQ(a.id, b.id);
}

TEST(Record, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { load_record("/nonexistent/x.ecgb"); }), ErrorCode::Io);
}

TEST(Record, NonFiniteSamplesRejected) {
  auto r = random_record(1, 4, 6);
  r.signal[2] = std::nanf("");
  EXPECT_EQ(code_of([&] { r.validate(); }), ErrorCode::Corruption);
}

TEST(Segment, PaperGeometry) {
  auto r = random_record(12, 5000, 7);
  auto g = segment_record(r, 40);
  EXPECT_EQ(g.count(), 40u);
  EXPECT_EQ(g.segment_length, 125u);
  EXPECT_EQ(g.patch_size(), 1500u);
  // Segment t holds samples (t−1)·L .. t·L−1 of each lead.
  EXPECT_EQ(g.segment(3)[0], r.signal(0, 250));
  EXPECT_EQ(g.segment(3)[125 * 5 + 7], r.signal(5, 257));
}

TEST(Segment, SingleSegmentIsRecord) {
  auto r = random_record(2, 30, 8);
  auto g = segment_record(r, 1);
  ASSERT_EQ(g.count(), 1u);
  EXPECT_TRUE(std::equal(g.segment(1).begin(), g.segment(1).end(), r.signal.data().begin()));
}

TEST(Segment, ReassembleIsIdentityForEveryDivisor) {
  auto r = random_record(3, 60, 9);
  for (std::size_t t = 1; t <= 60; ++t) {
    if (60 % t) continue;
    EXPECT_EQ(reassemble(segment_record(r, t)), r.signal) << "T=" << t;
  }
}

TEST(Segment, NonDivisorIsConfigError) {
  auto r = random_record(1, 10, 10);
  EXPECT_EQ(code_of([&] { segment_record(r, 3); }), ErrorCode::Config);
}

TEST(Normalize, Examples) {
  NormalizationOptions o;
  std::vector<double> c(6, 4.2);
  for (double v : normalize_segment<double>(c, 1, o)) EXPECT_EQ(v, 0.0);
  std::vector<double> x{0, 2};
  auto f = normalize_segment<double>(x, 1, o);
  EXPECT_NEAR(f[0], -1.0, 1e-6);
  EXPECT_NEAR(f[1], 1.0, 1e-6);
}

TEST(Normalize, StandardisedAndAffineInvariant) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0, 2);
  NormalizationOptions o;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(40);
    for (auto& v : x) v = n(rng);
    auto f = normalize_segment<double>(x, 4, o);
    double mu = 0, var = 0;
    for (double v : f) mu += v;
    mu /= 40;
    for (double v : f) var += (v - mu) * (v - mu);
    var /= 40;
    EXPECT_LE(std::abs(mu), 1e-6);
    EXPECT_LE(std::abs(var - 1), 1e-4);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 3.5 * x[i] - 7.0;
    auto g = normalize_segment<double>(y, 4, o);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(f[i], g[i], 1e-5);
  }
}

TEST(Normalize, PerLeadAndSampleVariance) {
  NormalizationOptions o;
  o.scope = NormalizationScope::PerLead;
  std::vector<double> x{0, 2, 10, 14};
  auto f = normalize_segment<double>(x, 2, o);
  EXPECT_NEAR(f[0], -1, 1e-6);
  EXPECT_NEAR(f[2], -1, 1e-6);
  o.scope = NormalizationScope::Segment;
  o.variance = VarianceKind::Sample;
  auto s = normalize_segment<double>(std::vector<double>{0, 2}, 1, o);
  EXPECT_NEAR(s[1], 1 / std::sqrt(2.0), 1e-6);
}

TEST(Synth, LengthAndDeterminism) {
  SynthConfig c = small_synth(12);
  c.duration = 5.0;
  auto a = synth_normal(c);
  EXPECT_EQ(a.samples(), 1250u);
  EXPECT_EQ(a.label, Label::Normal);
  auto b = synth_normal(c);
  EXPECT_EQ(a.signal, b.signal);
  c.seed = 13;
  EXPECT_FALSE(synth_normal(c).signal == a.signal);
}

TEST(Synth, AutocorrelationPeaksAtBeatPeriod) {
  for (double hr : {60.0, 72.0, 90.0}) {
    SynthConfig c = small_synth(14);
    c.duration = 10.0;
    c.heart_rate = hr;
    c.rr_jitter = 0.02;
    auto r = synth_normal(c);
    const std::size_t q = r.samples();
    std::vector<double> x(q);
    double mu = 0;
    for (std::size_t i = 0; i < q; ++i) mu += (x[i] = r.signal(1, i));
    mu /= double(q);
    for (auto& v : x) v -= mu;
    const auto expected = static_cast<std::size_t>(std::lround(c.fs * 60.0 / hr));
    std::size_t best = 0;
    double best_v = -1e300;
    for (std::size_t lag = expected / 2; lag < expected * 3 / 2; ++lag) {
      double s = 0;
      for (std::size_t i = 0; i + lag < q; ++i) s += x[i] * x[i + lag];
      s /= double(q - lag);
      if (s > best_v) {
        best_v = s;
        best = lag;
      }
    }
    EXPECT_NEAR(double(best), double(expected), 0.05 * double(expected)) << "hr " << hr;
  }
}

TEST(Synth, InvalidConfigRejected) {
  SynthConfig c = small_synth(15);
  c.heart_rate = 0;
  EXPECT_EQ(code_of([&] { synth_normal(c); }), ErrorCode::Config);
  c = small_synth(15);
  c.duration = 1.0 / 3.0;
  EXPECT_EQ(code_of([&] { synth_normal(c); }), ErrorCode::Config);
}

class InjectTest : public ::testing::TestWithParam<AnomalyKind> {};

TEST_P(InjectTest, LocalAndConstructive) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto base = synth_normal(small_synth(100 + seed));
    auto bad = inject_anomaly(base, GetParam(), seed);
    EXPECT_EQ(bad.label, Label::Abnormal);
    ASSERT_TRUE(bad.point_mask);
    const auto& m = *bad.point_mask;
    std::size_t marked = 0;
    double inside = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double d = double(bad.signal[i]) - double(base.signal[i]);
      if (m[i]) {
        ++marked;
        inside += d * d;
      } else {
        EXPECT_EQ(bad.signal[i], base.signal[i]);
      }
    }
    ASSERT_GE(marked, 1u);
    EXPECT_GT(inside / double(marked), 0.0);
    // All marked points of a lead form one contiguous window.
    for (std::size_t k = 0; k < bad.leads(); ++k) {
      std::size_t first = m.size(), last = 0;
      std::size_t count = 0;
      for (std::size_t q = 0; q < bad.samples(); ++q) {
        if (m[k * bad.samples() + q]) {
          first = std::min(first, q);
          last = q;
          ++count;
        }
      }
      if (count) {
        EXPECT_EQ(count, last - first + 1);
      }
    }
  }
}

TEST_P(InjectTest, DeterministicGivenSeed) {
  auto base = synth_normal(small_synth(200));
  auto a = inject_anomaly(base, GetParam(), 9);
  auto b = inject_anomaly(base, GetParam(), 9);
  EXPECT_EQ(a.signal, b.signal);
  EXPECT_EQ(a.point_mask, b.point_mask);
}

INSTANTIATE_TEST_SUITE_P(Kinds, InjectTest,
                         ::testing::Values(AnomalyKind::WidenedBeat, AnomalyKind::DroppedBeat, AnomalyKind::StShift));

TEST(Inject, RequiresNormalRecord) {
  auto base = synth_normal(small_synth(300));
  auto bad = inject_anomaly(base, AnomalyKind::StShift, 1);
  EXPECT_EQ(code_of([&] { inject_anomaly(bad, AnomalyKind::StShift, 2); }), ErrorCode::Contract);
  EXPECT_EQ(code_of([] { parse_anomaly_kind("wobble"); }), ErrorCode::Config);
  EXPECT_EQ(parse_anomaly_kind("dropped_beat"), AnomalyKind::DroppedBeat);
}

TEST(Dataset, WritesManifestsAndIsThreadCountIndependent) {
  TempDir dir;
  SynthDatasetOptions o;
  o.n_normal = 6;
  o.n_abnormal = 3;
  o.n_test_normal = 2;
  o.leads = 2;
  o.duration = 2.0;
  o.seed = 4;
  auto s = write_synthetic_dataset(o, dir.path());
  EXPECT_EQ(s.n_train, 4u);
  auto train = read_manifest(s.train_manifest);
  auto test = read_manifest(s.test_manifest);
  EXPECT_EQ(train.size(), 4u);
  EXPECT_EQ(test.size(), 5u);
  for (const auto& e : train) EXPECT_EQ(e.label, Label::Normal);
  auto records = load_manifest_records(test);
  std::size_t abnormal = 0;
  for (const auto& r : records) abnormal += r.label == Label::Abnormal;
  EXPECT_EQ(abnormal, 3u);

  mmae::set_max_threads(1);
  auto serial = synthesize_records(o);
  mmae::set_max_threads(0);
  auto parallel = synthesize_records(o);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) EXPECT_EQ(serial[i].signal, parallel[i].signal);
}

TEST(Manifest, RelativePathsResolveAgainstManifest) {
  TempDir dir;
  fs::create_directories(dir.path() / "sub");
  save_record(random_record(2, 8, 20), dir.path() / "sub" / "r.ecgb");
  std::ofstream(dir.path() / "sub" / "m.json") << R"([{"path": "r.ecgb", "label": "normal"}])";
  auto entries = read_manifest(dir.path() / "sub" / "m.json");
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(load_manifest_records(entries).front().leads(), 2u);
}

TEST(Manifest, MalformedIsFormatError) {
  TempDir dir;
  std::ofstream(dir.path() / "m.json") << "{not json";
  EXPECT_EQ(code_of([&] { read_manifest(dir.path() / "m.json"); }), ErrorCode::Format);
}

TEST(Import, SplitsNormalsAndKeepsAbnormalsForTest) {
  TempDir dir;
  fs::create_directories(dir.path() / "in");
  for (int i = 0; i < 10; ++i) {
    auto r = random_record(2, 8, 30 + i);
    r.id = "n" + std::to_string(i);
    save_record(r, dir.path() / "in" / (r.id + ".ecgb"));
  }
  auto bad = random_record(2, 8, 50);
  bad.id = "a0";
  bad.label = Label::Abnormal;
  save_record(bad, dir.path() / "in" / "a0.ecgb");
  auto unl = random_record(2, 8, 51);
  unl.id = "u0";
  unl.label = Label::Unlabeled;
  save_record(unl, dir.path() / "in" / "u0.ecgb");
  auto s = import_directory(dir.path() / "in", dir.path() / "out", 0.3, 1);
  EXPECT_EQ(s.n_train + s.n_test_normal, 10u);
  EXPECT_EQ(s.n_test_normal, 3u);
  EXPECT_EQ(s.n_test_abnormal, 1u);
  EXPECT_EQ(s.skipped, 1u);
  EXPECT_EQ(read_manifest(s.train_manifest).size(), s.n_train);
}

}  // namespace
