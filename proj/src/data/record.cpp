#include "data/record.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mmae::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<char, 4> kMagic{'E', 'C', 'G', 'B'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 2 + 2 + 4 + 4;

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(const unsigned char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::Io, "short write to " + path.string());
}

void write_sidecar(const EcgRecord& record, const fs::path& path, bool with_fs) {
  json meta{{"id", record.id}, {"label", to_string(record.label)}};
  if (with_fs) meta["fs"] = record.fs;
  if (record.point_mask) {
    const fs::path mpath = mask_path(path);
    meta["mask_path"] = mpath.filename().string();
    write_file(mpath, std::string(record.point_mask->begin(), record.point_mask->end()));
  }
  write_file(sidecar_path(path), meta.dump(2) + "\n");
}

struct Sidecar {
  std::string id;
  Label label = Label::Unlabeled;
  std::optional<std::uint32_t> fs;
  std::optional<fs::path> mask;
};

Sidecar read_sidecar(const fs::path& record_path) {
  Sidecar s;
  s.id = record_path.stem().string();
  const fs::path meta_path = sidecar_path(record_path);
  if (!fs::exists(meta_path)) return s;
  json meta;
  try {
    meta = json::parse(read_file(meta_path));
  } catch (const json::exception& e) {
    throw_error(ErrorCode::Format, meta_path.string() + ": " + e.what());
  }
  require(meta.is_object(), ErrorCode::Format, meta_path.string() + ": sidecar must be a JSON object");
  if (meta.contains("id")) s.id = meta.at("id").get<std::string>();
  if (meta.contains("label")) s.label = parse_label(meta.at("label").get<std::string>());
  if (meta.contains("fs")) s.fs = meta.at("fs").get<std::uint32_t>();
  if (meta.contains("mask_path") && !meta.at("mask_path").is_null()) {
    s.mask = meta_path.parent_path() / meta.at("mask_path").get<std::string>();
  }
  return s;
}

void attach_sidecar(EcgRecord& record, const Sidecar& side) {
  record.id = side.id;
  record.label = side.label;
  if (side.mask) {
    const std::string bytes = read_file(*side.mask);
    require(bytes.size() == record.signal.size(), ErrorCode::Corruption,
            side.mask->string() + ": mask has " + std::to_string(bytes.size()) + " bytes, expected " +
                std::to_string(record.signal.size()));
    std::vector<std::uint8_t> mask(bytes.begin(), bytes.end());
    for (auto m : mask) require(m <= 1, ErrorCode::Corruption, side.mask->string() + ": mask bytes must be 0 or 1");
    record.point_mask = std::move(mask);
  }
}

EcgRecord load_ecgb(const fs::path& path, const std::string& bytes) {
  require(bytes.size() >= kHeaderBytes, ErrorCode::Format, path.string() + ": truncated header");
  require(std::memcmp(bytes.data(), kMagic.data(), 4) == 0, ErrorCode::Format, path.string() + ": bad magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto version = get_le<std::uint16_t>(p + 4);
  require(version == kVersion, ErrorCode::Format, path.string() + ": unsupported version " + std::to_string(version));
  const std::size_t leads = get_le<std::uint16_t>(p + 6);
  const std::size_t samples = get_le<std::uint32_t>(p + 8);
  const auto fs_hz = get_le<std::uint32_t>(p + 12);
  require(leads >= 1 && samples >= 1, ErrorCode::Corruption, path.string() + ": empty signal in header");
  const std::size_t expected = kHeaderBytes + leads * samples * 4;
  require(bytes.size() == expected, ErrorCode::Corruption,
          path.string() + ": payload size " + std::to_string(bytes.size()) + " does not match header (" +
              std::to_string(expected) + ")");
  std::vector<float> signal(leads * samples);
  for (std::size_t i = 0; i < signal.size(); ++i) {
    const auto bits = get_le<std::uint32_t>(p + kHeaderBytes + 4 * i);
    std::memcpy(&signal[i], &bits, 4);
  }
  EcgRecord record = make_record(path.stem().string(), leads, samples, fs_hz, std::move(signal));
  attach_sidecar(record, read_sidecar(path));
  record.validate();
  return record;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

EcgRecord load_csv(const fs::path& path) {
  const Sidecar side = read_sidecar(path);
  require(side.fs.has_value(), ErrorCode::Format, path.string() + ": CSV records need \"fs\" in the sidecar");
  std::istringstream in(read_file(path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::Format, path.string() + ": missing header row");
  const std::size_t leads = split_csv_line(line).size();
  require(leads >= 1, ErrorCode::Format, path.string() + ": header has no columns");
  std::vector<std::vector<float>> columns(leads);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto cells = split_csv_line(line);
    require(cells.size() == leads, ErrorCode::Corruption,
            path.string() + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " columns");
    for (std::size_t k = 0; k < leads; ++k) {
      float v = 0;
      const char* b = cells[k].data();
      const char* e = b + cells[k].size();
      while (b < e && *b == ' ') ++b;
      auto [ptr, ec] = std::from_chars(b, e, v);
      require(ec == std::errc() && ptr == e, ErrorCode::Format,
              path.string() + ": unparsable value '" + cells[k] + "' on row " + std::to_string(row));
      columns[k].push_back(v);
    }
  }
  require(row >= 1, ErrorCode::Format, path.string() + ": no samples");
  std::vector<float> signal;
  signal.reserve(leads * row);
  for (auto& c : columns) signal.insert(signal.end(), c.begin(), c.end());
  EcgRecord record = make_record(side.id, leads, row, *side.fs, std::move(signal));
  attach_sidecar(record, side);
  record.validate();
  return record;
}

}  // namespace

const char* to_string(Label label) noexcept {
  switch (label) {
    case Label::Normal: return "normal";
    case Label::Abnormal: return "abnormal";
    case Label::Unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

Label parse_label(const std::string& s) {
  if (s == "normal") return Label::Normal;
  if (s == "abnormal") return Label::Abnormal;
  if (s == "unlabeled") return Label::Unlabeled;
  throw_error(ErrorCode::Format, "unknown label '" + s + "'");
}

void EcgRecord::validate() const {
  require(signal.rank() == 2 && leads() >= 1 && samples() >= 1, ErrorCode::Shape, "record signal must be K×Q");
  for (float v : signal.data()) require(std::isfinite(v), ErrorCode::Corruption, "record '" + id + "' has non-finite samples");
  if (point_mask) {
    require(point_mask->size() == signal.size(), ErrorCode::Shape, "point mask shape differs from the signal");
  }
}

EcgRecord make_record(std::string id, std::size_t leads, std::size_t samples, std::uint32_t fs,
                      std::vector<float> signal) {
  EcgRecord r;
  r.id = std::move(id);
  r.signal = tensor::Tensor<float>({leads, samples}, std::move(signal));
  r.fs = fs;
  return r;
}

fs::path sidecar_path(const fs::path& record_path) {
  fs::path p = record_path;
  p.replace_extension(".meta.json");
  return p;
}

fs::path mask_path(const fs::path& record_path) {
  fs::path p = record_path;
  p.replace_extension(".mask");
  return p;
}

void save_record(const EcgRecord& record, const fs::path& path) {
  record.validate();
  require(record.leads() <= 0xffff, ErrorCode::Config, "ECGB stores at most 65535 leads");
  require(record.samples() <= 0xffffffffu, ErrorCode::Config, "record too long for ECGB");
  std::string out;
  out.reserve(kHeaderBytes + record.signal.size() * 4);
  out.append(kMagic.data(), 4);
  put_le<std::uint16_t>(out, kVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(record.leads()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(record.samples()));
  put_le<std::uint32_t>(out, record.fs);
  for (float v : record.signal.data()) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &v, 4);
    put_le<std::uint32_t>(out, bits);
  }
  write_file(path, out);
  write_sidecar(record, path, false);
}

void save_record_csv(const EcgRecord& record, const fs::path& path) {
  record.validate();
  const auto names = lead_names(record.leads());
  std::string out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (k) out += ',';
    out += names[k];
  }
  out += '\n';
  char buf[64];
  for (std::size_t q = 0; q < record.samples(); ++q) {
    for (std::size_t k = 0; k < record.leads(); ++k) {
      if (k) out += ',';
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), record.signal(k, q));
      out.append(buf, end);
    }
    out += '\n';
  }
  write_file(path, out);
  write_sidecar(record, path, true);
}

EcgRecord load_record(const fs::path& path) {
  require(fs::exists(path), ErrorCode::Io, "no such record: " + path.string());
  if (path.extension() == ".csv") return load_csv(path);
  return load_ecgb(path, read_file(path));
}

std::vector<std::string> lead_names(std::size_t leads) {
  static const char* standard[] = {"I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6"};
  std::vector<std::string> names;
  for (std::size_t k = 0; k < leads; ++k) {
    names.push_back(leads == 12 ? standard[k] : "lead" + std::to_string(k + 1));
  }
  return names;
}

}  // namespace mmae::data
