#include "model/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "common/parallel.hpp"

namespace mmae::model {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'M', 'M', 'A', 'E'};
constexpr std::uint16_t kVersion = 1;

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

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  ckpt.config.validate();
  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : ckpt.params.named()) {
    tensors.push_back({{"name", name}, {"shape", t->shape()}, {"offset", offset}});
    offset += t->size() * 4;
  }
  const json header{{"config", ckpt.config}, {"extra", ckpt.extra}, {"tensors", tensors}};
  const std::string text = header.dump();
  std::string out(kMagic, 4);
  put_le<std::uint16_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out.reserve(out.size() + offset);
  for (const auto& [name, t] : ckpt.params.named()) {
    for (float v : t->data()) {
      std::uint32_t bits = 0;
      std::memcpy(&bits, &v, 4);
      put_le(out, bits);
    }
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin) {
  require(bytes.size() >= 10, ErrorCode::Format, origin + ": truncated checkpoint");
  require(std::memcmp(bytes.data(), kMagic, 4) == 0, ErrorCode::Format, origin + ": bad magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto version = get_le<std::uint16_t>(p + 4);
  require(version == kVersion, ErrorCode::Format, origin + ": unsupported checkpoint version " + std::to_string(version));
  const std::size_t header_len = get_le<std::uint32_t>(p + 6);
  require(bytes.size() >= 10 + header_len, ErrorCode::Corruption, origin + ": header extends past end of file");
  json header;
  try {
    header = json::parse(bytes.substr(10, header_len));
  } catch (const json::exception& e) {
    throw_error(ErrorCode::Corruption, origin + ": unreadable header: " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.config = header.at("config").get<ModelConfig>();
    if (header.contains("extra")) ckpt.extra = header.at("extra");
  } catch (const json::exception& e) {
    throw_error(ErrorCode::Corruption, origin + ": " + e.what());
  }
  ckpt.config.validate();
  ckpt.params = zero_params<float>(ckpt.config);

  std::map<std::string, json> manifest;
  for (const auto& t : header.at("tensors")) manifest[t.at("name").get<std::string>()] = t;
  const std::size_t payload = 10 + header_len;
  auto named = ckpt.params.named();
  require(manifest.size() == named.size(), ErrorCode::Corruption,
          origin + ": tensor count " + std::to_string(manifest.size()) + " does not match the config (" +
              std::to_string(named.size()) + ")");
  for (auto& [name, t] : named) {
    auto it = manifest.find(name);
    require(it != manifest.end(), ErrorCode::Corruption, origin + ": missing tensor '" + name + "'");
    const auto shape = it->second.at("shape").get<tensor::Shape>();
    require(shape == t->shape(), ErrorCode::Corruption,
            origin + ": tensor '" + name + "' has shape " + tensor::shape_string(shape) + ", config implies " +
                tensor::shape_string(t->shape()));
    const std::size_t offset = it->second.at("offset").get<std::size_t>();
    require(payload + offset + t->size() * 4 <= bytes.size(), ErrorCode::Corruption,
            origin + ": tensor '" + name + "' extends past end of file");
    auto dst = t->data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const auto bits = get_le<std::uint32_t>(p + payload + offset + 4 * i);
      std::memcpy(&dst[i], &bits, 4);
    }
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::Io, "short write to " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str(), path.string());
}

std::string checkpoint_hash(const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(bytes.data(), bytes.size())));
  return buf;
}

}  // namespace mmae::model
