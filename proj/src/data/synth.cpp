#include "data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "common/parallel.hpp"
#include "data/manifest.hpp"

namespace mmae::data {

namespace {

struct Bump {
  double offset;  // seconds relative to the R peak
  double width;   // Gaussian sigma, seconds
  double gain;    // fraction of the wave amplitude
  int wave;       // 0 = P, 1 = QRS, 2 = T
};

constexpr Bump kBeat[] = {
    {-0.200, 0.025, 1.00, 0},  // P
    {-0.030, 0.008, -0.15, 1},  // Q
    {0.000, 0.011, 1.00, 1},   // R
    {0.032, 0.010, -0.25, 1},  // S
    {0.300, 0.050, 1.00, 2},   // T
};

double amplitude_of(const WaveAmplitudes& a, int wave) {
  return wave == 0 ? a.p : wave == 1 ? a.qrs : a.t;
}

double gaussian(double x, double sigma) { return std::exp(-0.5 * (x / sigma) * (x / sigma)); }

// Strongest beat in a random interior window, by summed squared deviation
// from the per-lead mean.
std::size_t locate_beat(const EcgRecord& r, std::mt19937_64& rng) {
  const std::size_t q = r.samples();
  const double fs = r.fs;
  const auto lo = static_cast<std::size_t>(std::min<double>(0.5 * fs, q / 4.0));
  const auto span = static_cast<std::size_t>(std::min<double>(1.3 * fs, q / 2.0));
  const std::size_t hi = q > lo + span ? q - lo - span : lo;
  std::uniform_int_distribution<std::size_t> start_dist(lo, std::max(lo, hi));
  const std::size_t start = start_dist(rng);
  std::vector<double> means(r.leads(), 0.0);
  for (std::size_t k = 0; k < r.leads(); ++k) {
    for (std::size_t i = 0; i < q; ++i) means[k] += r.signal(k, i);
    means[k] /= double(q);
  }
  std::size_t best = start;
  double best_energy = -1;
  for (std::size_t i = start; i < std::min(q, start + span); ++i) {
    double e = 0;
    for (std::size_t k = 0; k < r.leads(); ++k) e += (r.signal(k, i) - means[k]) * (r.signal(k, i) - means[k]);
    if (e > best_energy) {
      best_energy = e;
      best = i;
    }
  }
  return best;
}

struct Window {
  std::size_t begin;
  std::size_t end;  // exclusive
};

Window window_around(std::size_t center, double before, double after, const EcgRecord& r) {
  const double c = double(center);
  const auto b = static_cast<std::ptrdiff_t>(std::floor(c - before * r.fs));
  const auto e = static_cast<std::ptrdiff_t>(std::ceil(c + after * r.fs)) + 1;
  return {static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, b)),
          static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(r.samples()), e))};
}

// Straight line between the samples bounding the window on lead k.
double chord(const EcgRecord& r, std::size_t k, const Window& w, std::size_t i) {
  const double a = r.signal(k, w.begin);
  const double b = r.signal(k, w.end - 1);
  const double span = double(w.end - 1 - w.begin);
  return span > 0 ? a + (b - a) * double(i - w.begin) / span : a;
}

}  // namespace

std::vector<WaveAmplitudes> default_lead_amplitudes(std::size_t leads) {
  static const WaveAmplitudes table[12] = {
      {0.10, 0.80, 0.20},    // I
      {0.15, 1.20, 0.30},    // II
      {0.05, 0.50, 0.10},    // III
      {-0.10, -0.90, -0.20}, // aVR
      {0.05, 0.40, 0.10},    // aVL
      {0.10, 0.80, 0.20},    // aVF
      {0.05, -0.70, -0.05},  // V1
      {0.08, 1.00, 0.40},    // V2
      {0.08, 1.30, 0.40},    // V3
      {0.10, 1.60, 0.35},    // V4
      {0.10, 1.40, 0.30},    // V5
      {0.10, 1.10, 0.25},    // V6
  };
  std::vector<WaveAmplitudes> out;
  for (std::size_t k = 0; k < leads; ++k) out.push_back(table[k % 12]);
  return out;
}

std::size_t SynthConfig::samples() const {
  return static_cast<std::size_t>(std::llround(double(fs) * duration));
}

void SynthConfig::validate() const {
  require(fs > 0, ErrorCode::Config, "sampling rate must be positive");
  require(duration > 0, ErrorCode::Config, "duration must be positive");
  require(std::abs(double(fs) * duration - double(samples())) < 1e-6, ErrorCode::Config,
          "fs·duration must be a whole number of samples");
  require(heart_rate > 0, ErrorCode::Config, "heart rate must be positive");
  require(rr_jitter >= 0 && rr_jitter < 1, ErrorCode::Config, "rr jitter must lie in [0, 1)");
  require(!leads.empty(), ErrorCode::Config, "at least one lead is required");
  require(noise_std >= 0 && wander_amplitude >= 0, ErrorCode::Config, "noise levels must be non-negative");
}

EcgRecord synth_normal(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t q = cfg.samples();
  const std::size_t k_leads = cfg.leads.size();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  const double rr = 60.0 / cfg.heart_rate;
  std::vector<double> r_times;
  for (double t = -rr * unit(rng); t < cfg.duration + 0.6; t += rr * (1.0 + cfg.rr_jitter * (2.0 * unit(rng) - 1.0))) {
    r_times.push_back(t);
  }
  const double wander_phase = 2.0 * std::numbers::pi * unit(rng);

  std::vector<float> signal(k_leads * q, 0.0f);
  const double fs = cfg.fs;
  for (std::size_t k = 0; k < k_leads; ++k) {
    const WaveAmplitudes& amp = cfg.leads[k];
    for (std::size_t i = 0; i < q; ++i) {
      const double t = double(i) / fs;
      double v = cfg.wander_amplitude *
                 std::sin(2.0 * std::numbers::pi * cfg.wander_frequency * t + wander_phase + 0.4 * double(k));
      for (double r : r_times) {
        const double dt = t - r;
        if (dt < -0.35 || dt > 0.55) continue;
        for (const Bump& b : kBeat) v += amplitude_of(amp, b.wave) * b.gain * gaussian(dt - b.offset, b.width);
      }
      signal[k * q + i] = static_cast<float>(v);
    }
  }
  if (cfg.noise_std > 0) {
    for (auto& s : signal) s += static_cast<float>(cfg.noise_std * noise(rng));
  }
  EcgRecord rec = make_record(cfg.id, k_leads, q, cfg.fs, std::move(signal));
  rec.label = Label::Normal;
  return rec;
}

const char* to_string(AnomalyKind kind) noexcept {
  switch (kind) {
    case AnomalyKind::WidenedBeat: return "widened_beat";
    case AnomalyKind::DroppedBeat: return "dropped_beat";
    case AnomalyKind::StShift: return "st_shift";
  }
  return "widened_beat";
}

AnomalyKind parse_anomaly_kind(const std::string& s) {
  if (s == "widened_beat") return AnomalyKind::WidenedBeat;
  if (s == "dropped_beat") return AnomalyKind::DroppedBeat;
  if (s == "st_shift") return AnomalyKind::StShift;
  throw_error(ErrorCode::Config, "unknown anomaly kind '" + s + "'");
}

EcgRecord inject_anomaly(const EcgRecord& record, AnomalyKind kind, std::uint64_t seed) {
  record.validate();
  require(record.label == Label::Normal, ErrorCode::Contract, "anomalies are injected into normal records only");
  require(record.fs > 0, ErrorCode::Contract, "record has no sampling rate");
  std::mt19937_64 rng(seed);
  EcgRecord out = record;
  out.label = Label::Abnormal;
  std::vector<std::uint8_t> mask(record.signal.size(), 0);
  const std::size_t q = record.samples();
  const std::size_t r_peak = locate_beat(record, rng);

  switch (kind) {
    case AnomalyKind::WidenedBeat: {
      // QRS replaced by a bump 1.6× taller and ~4× wider.
      const Window w = window_around(r_peak, 0.15, 0.15, record);
      for (std::size_t k = 0; k < record.leads(); ++k) {
        const double height = record.signal(k, r_peak) - chord(record, k, w, r_peak);
        for (std::size_t i = w.begin; i < w.end; ++i) {
          const double dt = (double(i) - double(r_peak)) / record.fs;
          out.signal(k, i) = static_cast<float>(chord(record, k, w, i) + 1.6 * height * gaussian(dt, 0.04));
          mask[k * q + i] = 1;
        }
      }
      break;
    }
    case AnomalyKind::DroppedBeat: {
      const Window w = window_around(r_peak, 0.28, 0.45, record);
      for (std::size_t k = 0; k < record.leads(); ++k) {
        for (std::size_t i = w.begin; i < w.end; ++i) {
          out.signal(k, i) = static_cast<float>(chord(record, k, w, i));
          mask[k * q + i] = 1;
        }
      }
      break;
    }
    case AnomalyKind::StShift: {
      const Window w = window_around(r_peak, -0.08, 0.32, record);
      std::bernoulli_distribution pick(0.5);
      std::vector<std::size_t> chosen;
      for (std::size_t k = 0; k < record.leads(); ++k)
        if (pick(rng)) chosen.push_back(k);
      if (chosen.empty()) chosen.push_back(std::uniform_int_distribution<std::size_t>(0, record.leads() - 1)(rng));
      const double sign = pick(rng) ? 1.0 : -1.0;
      const std::size_t pre = r_peak >= std::size_t(0.08 * record.fs) ? r_peak - std::size_t(0.08 * record.fs) : 0;
      for (std::size_t k : chosen) {
        const double qrs = std::abs(double(record.signal(k, r_peak)) - double(record.signal(k, pre)));
        const double shift = sign * std::max(0.1, 0.35 * qrs);
        for (std::size_t i = w.begin; i < w.end; ++i) {
          out.signal(k, i) = static_cast<float>(record.signal(k, i) + shift);
          mask[k * q + i] = 1;
        }
      }
      break;
    }
  }
  out.point_mask = std::move(mask);
  return out;
}

std::vector<EcgRecord> synthesize_records(const SynthDatasetOptions& o) {
  require(o.n_test_normal <= o.n_normal, ErrorCode::Config, "more held-out normals than normal records");
  require(o.heart_rate_min > 0 && o.heart_rate_max >= o.heart_rate_min, ErrorCode::Config, "invalid heart-rate range");
  const std::size_t total = o.n_normal + o.n_abnormal;
  std::vector<EcgRecord> records(total);
  const std::size_t n_train = o.n_normal - o.n_test_normal;
  parallel_for(total, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(o.seed, i, 0x5eed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SynthConfig cfg;
    cfg.fs = o.fs;
    cfg.duration = o.duration;
    cfg.heart_rate = o.heart_rate_min + (o.heart_rate_max - o.heart_rate_min) * unit(rng);
    cfg.noise_std = o.noise_std;
    cfg.rr_jitter = o.rr_jitter;
    cfg.wander_amplitude = o.wander_amplitude;
    cfg.leads = default_lead_amplitudes(o.leads);
    const double gain = 0.85 + 0.3 * unit(rng);
    for (auto& a : cfg.leads) {
      a.p *= gain;
      a.qrs *= gain;
      a.t *= gain * (0.8 + 0.4 * unit(rng));
    }
    cfg.wander_frequency = 0.15 + 0.3 * unit(rng);
    cfg.seed = derive_seed(o.seed, i, 1);
    char id[32];
    if (i < n_train) {
      std::snprintf(id, sizeof id, "train_%05zu", i);
    } else if (i < o.n_normal) {
      std::snprintf(id, sizeof id, "test_normal_%05zu", i - n_train);
    } else {
      std::snprintf(id, sizeof id, "test_abnormal_%05zu", i - o.n_normal);
    }
    cfg.id = id;
    EcgRecord rec = synth_normal(cfg);
    if (i >= o.n_normal) {
      const auto kind = static_cast<AnomalyKind>((i - o.n_normal) % 3);
      rec = inject_anomaly(rec, kind, derive_seed(o.seed, i, 2));
    }
    records[i] = std::move(rec);
  });
  return records;
}

SynthDatasetSummary write_synthetic_dataset(const SynthDatasetOptions& o, const std::filesystem::path& out_dir) {
  const auto records = synthesize_records(o);
  std::filesystem::create_directories(out_dir / "records");
  std::vector<ManifestEntry> train, test, all;
  const std::size_t n_train = o.n_normal - o.n_test_normal;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto path = out_dir / "records" / (records[i].id + ".ecgb");
    save_record(records[i], path);
    ManifestEntry e{path, records[i].label};
    (i < n_train ? train : test).push_back(e);
    all.push_back(e);
  }
  SynthDatasetSummary s;
  s.train_manifest = out_dir / "train.json";
  s.test_manifest = out_dir / "test.json";
  s.all_manifest = out_dir / "manifest.json";
  write_manifest(s.train_manifest, train);
  write_manifest(s.test_manifest, test);
  write_manifest(s.all_manifest, all);
  s.n_train = n_train;
  s.n_test_normal = o.n_test_normal;
  s.n_test_abnormal = o.n_abnormal;
  return s;
}

}  // namespace mmae::data
