#pragma once

#include <filesystem>
#include <vector>

#include "data/record.hpp"

namespace mmae::data {

struct ManifestEntry {
  std::filesystem::path path;
  Label label = Label::Unlabeled;
};

// A manifest is a JSON array of {"path", "label"} objects. Relative paths
// are resolved against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries);

std::vector<EcgRecord> load_manifest_records(const std::vector<ManifestEntry>& entries);

struct ImportSummary {
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::size_t n_train = 0;
  std::size_t n_test_normal = 0;
  std::size_t n_test_abnormal = 0;
  std::size_t skipped = 0;
};

// Scans `dir` for *.ecgb and *.csv records (with sidecars) and splits them
// into train.json (normal records only) and test.json (held-out normals plus
// every abnormal record). Unlabeled records are skipped.
ImportSummary import_directory(const std::filesystem::path& dir, const std::filesystem::path& out_dir,
                               double test_normal_fraction, std::uint64_t seed);

}  // namespace mmae::data
