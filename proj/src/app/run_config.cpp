#include "app/run_config.hpp"

#include <fstream>
#include <sstream>

#include "common/json_util.hpp"

namespace mmae::app {

using nlohmann::json;

void RunConfig::validate() const {
  model.validate();
  train.validate();
  infer.validate();
  require(data.leads == model.leads, ErrorCode::Config, "data.leads and model.leads disagree");
  require(data.segment_length == model.segment_length, ErrorCode::Config,
          "data.segment_length and model.segment_length disagree");
  require(data.fs > 0, ErrorCode::Config, "data.fs must be positive");
}

void to_json(json& j, const RunConfig& c) {
  j = json{{"data",
            {{"leads", c.data.leads},
             {"fs", c.data.fs},
             {"segment_length", c.data.segment_length},
             {"train_manifest", c.data.train_manifest},
             {"test_manifest", c.data.test_manifest}}},
           {"model", c.model},
           {"train", c.train},
           {"infer", c.infer}};
}

void from_json(const json& j, RunConfig& c) {
  JsonSection root(j, "config");
  if (root.has("data")) {
    JsonSection d(root.at("data"), "data");
    d.get("leads", c.data.leads);
    d.get("fs", c.data.fs);
    d.get("segment_length", c.data.segment_length);
    d.get("train_manifest", c.data.train_manifest);
    d.get("test_manifest", c.data.test_manifest);
    d.finish();
  }
  c.model.leads = c.data.leads;
  c.model.segment_length = c.data.segment_length;
  if (root.has("model")) from_json(root.at("model"), c.model);
  require(c.model.leads == c.data.leads, ErrorCode::Config,
          "model.leads (" + std::to_string(c.model.leads) + ") disagrees with data.leads (" +
              std::to_string(c.data.leads) + ")");
  require(c.model.segment_length == c.data.segment_length, ErrorCode::Config,
          "model.segment_length (" + std::to_string(c.model.segment_length) + ") disagrees with data.segment_length (" +
              std::to_string(c.data.segment_length) + ")");
  if (root.has("train")) from_json(root.at("train"), c.train);
  if (root.has("infer")) from_json(root.at("infer"), c.infer);
  root.finish();
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw_error(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c = j.get<RunConfig>();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig c = parse_run_config(ss.str());
  const auto base = path.parent_path();
  for (auto* p : {&c.data.train_manifest, &c.data.test_manifest}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  return c;
}

void check_record(const DataConfig& data, const model::ModelConfig& model, const data::EcgRecord& record) {
  require(record.fs == data.fs, ErrorCode::Validation,
          "record '" + record.id + "' is sampled at " + std::to_string(record.fs) + " Hz, config expects " +
              std::to_string(data.fs) + " Hz");
  require(record.leads() == model.leads && record.samples() == model.samples(), ErrorCode::Validation,
          "record '" + record.id + "' is " + std::to_string(record.leads()) + "x" + std::to_string(record.samples()) +
              ", config expects " + std::to_string(model.leads) + "x" + std::to_string(model.samples()));
}

}  // namespace mmae::app
