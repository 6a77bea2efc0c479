#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "data/record.hpp"

namespace mmae::data {

// Peak amplitudes (mV) of the P wave, QRS complex and T wave on one lead.
struct WaveAmplitudes {
  double p = 0.1;
  double qrs = 1.0;
  double t = 0.25;
};

// Default 12-lead amplitude table; other lead counts cycle through it.
std::vector<WaveAmplitudes> default_lead_amplitudes(std::size_t leads);

struct SynthConfig {
  std::string id = "synth";
  std::uint32_t fs = 250;
  double duration = 5.0;        // seconds
  double heart_rate = 70.0;     // bpm
  double rr_jitter = 0.05;      // ± fraction of the nominal RR interval
  std::vector<WaveAmplitudes> leads = default_lead_amplitudes(12);
  double noise_std = 0.02;
  double wander_amplitude = 0.05;
  double wander_frequency = 0.3;  // Hz
  std::uint64_t seed = 0;

  std::size_t samples() const;
  void validate() const;
};

// Quasi-periodic multi-lead signal: Gaussian P/QRS/T bumps per beat at
// jittered RR intervals, scaled per lead, plus baseline wander and white noise.
EcgRecord synth_normal(const SynthConfig& cfg);

enum class AnomalyKind { WidenedBeat, DroppedBeat, StShift };

const char* to_string(AnomalyKind kind) noexcept;
AnomalyKind parse_anomaly_kind(const std::string& s);

// Copy of a normal record with one modified beat; point_mask marks exactly
// the modified points and the label becomes abnormal.
EcgRecord inject_anomaly(const EcgRecord& record, AnomalyKind kind, std::uint64_t seed);

struct SynthDatasetOptions {
  std::size_t n_normal = 100;
  std::size_t n_abnormal = 20;
  // Normal records held out for the test manifest; the rest train.
  std::size_t n_test_normal = 20;
  std::size_t leads = 12;
  std::uint32_t fs = 250;
  double duration = 5.0;
  double heart_rate_min = 60.0;
  double heart_rate_max = 85.0;
  double noise_std = 0.02;
  double rr_jitter = 0.05;
  double wander_amplitude = 0.05;
  std::uint64_t seed = 0;
};

struct SynthDatasetSummary {
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::filesystem::path all_manifest;
  std::size_t n_train = 0;
  std::size_t n_test_normal = 0;
  std::size_t n_test_abnormal = 0;
};

// Writes ECGB records with sidecars plus train.json, test.json and
// manifest.json into out_dir. Per-record parameters (heart rate, gain,
// wander phase) are drawn from the dataset seed.
SynthDatasetSummary write_synthetic_dataset(const SynthDatasetOptions& options, const std::filesystem::path& out_dir);

// In-memory variant of the same generator: records in manifest order
// (train normals, test normals, test abnormals).
std::vector<EcgRecord> synthesize_records(const SynthDatasetOptions& options);

}  // namespace mmae::data
