#include "data/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "common/parallel.hpp"

namespace mmae::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open manifest " + manifest.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw_error(ErrorCode::Format, manifest.string() + ": " + e.what());
  }
  require(doc.is_array(), ErrorCode::Format, manifest.string() + ": manifest must be a JSON array");
  std::vector<ManifestEntry> out;
  for (const auto& item : doc) {
    require(item.is_object() && item.contains("path"), ErrorCode::Format,
            manifest.string() + ": every entry needs a \"path\"");
    ManifestEntry e;
    e.path = item.at("path").get<std::string>();
    if (e.path.is_relative()) e.path = manifest.parent_path() / e.path;
    e.label = item.contains("label") ? parse_label(item.at("label").get<std::string>()) : Label::Unlabeled;
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const fs::path& manifest, const std::vector<ManifestEntry>& entries) {
  const fs::path base = manifest.parent_path().empty() ? fs::path(".") : manifest.parent_path();
  json doc = json::array();
  for (const auto& e : entries) {
    fs::path p = e.path;
    std::error_code ec;
    const fs::path rel = fs::relative(e.path, base, ec);
    if (!ec && !rel.empty()) p = rel;
    doc.push_back({{"path", p.generic_string()}, {"label", to_string(e.label)}});
  }
  if (manifest.has_parent_path()) fs::create_directories(manifest.parent_path());
  std::ofstream out(manifest, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write manifest " + manifest.string());
  out << doc.dump(2) << "\n";
}

std::vector<EcgRecord> load_manifest_records(const std::vector<ManifestEntry>& entries) {
  std::vector<EcgRecord> records(entries.size());
  parallel_for(entries.size(), [&](std::size_t i) {
    records[i] = load_record(entries[i].path);
    // The manifest label wins over a missing sidecar label.
    if (records[i].label == Label::Unlabeled) records[i].label = entries[i].label;
  });
  return records;
}

ImportSummary import_directory(const fs::path& dir, const fs::path& out_dir, double test_normal_fraction,
                               std::uint64_t seed) {
  require(fs::is_directory(dir), ErrorCode::Io, "not a directory: " + dir.string());
  require(test_normal_fraction >= 0 && test_normal_fraction < 1, ErrorCode::Config,
          "test fraction must lie in [0, 1)");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".ecgb" || ext == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  ImportSummary s;
  std::vector<ManifestEntry> normals, abnormals;
  for (const auto& f : files) {
    const EcgRecord r = load_record(f);
    if (r.label == Label::Normal) {
      normals.push_back({fs::absolute(f), r.label});
    } else if (r.label == Label::Abnormal) {
      abnormals.push_back({fs::absolute(f), r.label});
    } else {
      ++s.skipped;
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(normals.begin(), normals.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_normal_fraction * double(normals.size())));
  std::vector<ManifestEntry> test(normals.begin(), normals.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<ManifestEntry> train(normals.begin() + static_cast<std::ptrdiff_t>(n_test), normals.end());
  auto by_path = [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; };
  std::sort(train.begin(), train.end(), by_path);
  std::sort(test.begin(), test.end(), by_path);
  test.insert(test.end(), abnormals.begin(), abnormals.end());

  s.train_manifest = out_dir / "train.json";
  s.test_manifest = out_dir / "test.json";
  write_manifest(s.train_manifest, train);
  write_manifest(s.test_manifest, test);
  s.n_train = train.size();
  s.n_test_normal = n_test;
  s.n_test_abnormal = abnormals.size();
  return s;
}

}  // namespace mmae::data
