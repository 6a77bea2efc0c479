#include "mmae/mmae.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "app/ablation.hpp"
#include "app/gradcheck_suite.hpp"
#include "app/run_config.hpp"
#include "app/svg.hpp"
#include "common/json_util.hpp"
#include "common/parallel.hpp"
#include "data/manifest.hpp"
#include "data/synth.hpp"
#include "model/counters.hpp"
#include "train/evaluate.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

struct mmae_record {
  mmae::data::EcgRecord record;
};

struct mmae_model {
  mmae::model::Checkpoint checkpoint;
  mmae::train::InferConfig infer;
};

struct mmae_report {
  mmae::train::AnomalyReport report;
};

namespace {

thread_local std::string g_last_error;

mmae_status status_of(mmae::ErrorCode code) {
  switch (code) {
    case mmae::ErrorCode::Config: return MMAE_ERR_CONFIG;
    case mmae::ErrorCode::Shape: return MMAE_ERR_SHAPE;
    case mmae::ErrorCode::Contract: return MMAE_ERR_CONTRACT;
    case mmae::ErrorCode::Format: return MMAE_ERR_FORMAT;
    case mmae::ErrorCode::Corruption: return MMAE_ERR_CORRUPT;
    case mmae::ErrorCode::Validation: return MMAE_ERR_VALIDATION;
    case mmae::ErrorCode::Metric: return MMAE_ERR_METRIC;
    case mmae::ErrorCode::Io: return MMAE_ERR_IO;
  }
  return MMAE_ERR_INTERNAL;
}

mmae_status fail(mmae_status s, const std::string& what) {
  g_last_error = what;
  return s;
}

template <typename F>
mmae_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return MMAE_OK;
  } catch (const mmae::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(MMAE_ERR_CONFIG, std::string("json: ") + e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(MMAE_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MMAE_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MMAE_ERR_INTERNAL, e.what());
  }
}

void need(const void* p, const char* name) {
  if (!p) throw mmae::Error(mmae::ErrorCode::Contract, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

json parse_json(const char* text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw mmae::Error(mmae::ErrorCode::Config, std::string(what) + " is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  mmae::require(static_cast<bool>(out), mmae::ErrorCode::Io, "cannot write " + path.string());
  out << text;
  mmae::require(static_cast<bool>(out), mmae::ErrorCode::Io, "short write to " + path.string());
}

mmae::data::SynthDatasetOptions parse_synth_options(const json& j) {
  mmae::data::SynthDatasetOptions o;
  mmae::JsonSection s(j, "synth");
  s.get("n_normal", o.n_normal);
  s.get("n_abnormal", o.n_abnormal);
  s.get("n_test_normal", o.n_test_normal);
  s.get("leads", o.leads);
  s.get("fs", o.fs);
  s.get("duration", o.duration);
  s.get("heart_rate_min", o.heart_rate_min);
  s.get("heart_rate_max", o.heart_rate_max);
  s.get("noise_std", o.noise_std);
  s.get("rr_jitter", o.rr_jitter);
  s.get("wander_amplitude", o.wander_amplitude);
  s.get("seed", o.seed);
  s.finish();
  return o;
}

// Infer settings stored with a checkpoint, or defaults.
mmae::train::InferConfig stored_infer(const mmae::model::Checkpoint& c) {
  if (c.extra.contains("infer")) return c.extra.at("infer").get<mmae::train::InferConfig>();
  return {};
}

std::vector<mmae::data::EcgRecord> load_checked(const fs::path& manifest, const mmae::model::ModelConfig& cfg,
                                                const mmae::app::DataConfig* data) {
  auto records = mmae::data::load_manifest_records(mmae::data::read_manifest(manifest));
  for (const auto& r : records) {
    if (data) {
      mmae::app::check_record(*data, cfg, r);
    } else {
      mmae::require(r.leads() == cfg.leads && r.samples() == cfg.samples(), mmae::ErrorCode::Validation,
                    "record '" + r.id + "' is " + std::to_string(r.leads()) + "x" + std::to_string(r.samples()) +
                        ", model expects " + std::to_string(cfg.leads) + "x" + std::to_string(cfg.samples()));
    }
  }
  return records;
}

}  // namespace

extern "C" {

const char* mmae_version(void) { return "0.1.0"; }

const char* mmae_status_name(mmae_status s) {
  switch (s) {
    case MMAE_OK: return "ok";
    case MMAE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MMAE_ERR_CONFIG: return "config error";
    case MMAE_ERR_FORMAT: return "format error";
    case MMAE_ERR_CORRUPT: return "corruption error";
    case MMAE_ERR_SHAPE: return "shape error";
    case MMAE_ERR_CONTRACT: return "contract error";
    case MMAE_ERR_VALIDATION: return "validation error";
    case MMAE_ERR_METRIC: return "metric error";
    case MMAE_ERR_IO: return "io error";
    case MMAE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mmae_last_error(void) { return g_last_error.c_str(); }

void mmae_string_free(char* s) { std::free(s); }

void mmae_set_threads(unsigned n) { mmae::set_max_threads(n); }

mmae_status mmae_config_default(char** out_json) {
  if (!out_json) return fail(MMAE_ERR_INVALID_ARGUMENT, "out_json must not be NULL");
  return guarded([&] { *out_json = dup_string(json(mmae::app::RunConfig{}).dump(2)); });
}

mmae_status mmae_config_normalize(const char* config_json, char** out_json) {
  if (!config_json || !out_json) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] { *out_json = dup_string(json(mmae::app::parse_run_config(config_json)).dump(2)); });
}

mmae_status mmae_record_load(const char* path, mmae_record** out) {
  if (!path || !out) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  *out = nullptr;
  return guarded([&] { *out = new mmae_record{mmae::data::load_record(path)}; });
}

mmae_status mmae_record_save(const mmae_record* record, const char* path) {
  if (!record || !path) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] {
    const fs::path p(path);
    if (p.extension() == ".csv") {
      mmae::data::save_record_csv(record->record, p);
    } else {
      mmae::data::save_record(record->record, p);
    }
  });
}

void mmae_record_free(mmae_record* record) { delete record; }

mmae_status mmae_record_shape(const mmae_record* record, size_t* leads, size_t* samples, uint32_t* fs_out) {
  if (!record) return fail(MMAE_ERR_INVALID_ARGUMENT, "record must not be NULL");
  if (leads) *leads = record->record.leads();
  if (samples) *samples = record->record.samples();
  if (fs_out) *fs_out = record->record.fs;
  return MMAE_OK;
}

const float* mmae_record_data(const mmae_record* record) {
  return record ? record->record.signal.data().data() : nullptr;
}

mmae_status mmae_record_info(const mmae_record* record, char** out_json) {
  if (!record || !out_json) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] {
    const auto& r = record->record;
    *out_json = dup_string(
        json{{"id", r.id}, {"label", mmae::data::to_string(r.label)}, {"has_mask", r.point_mask.has_value()}}.dump());
  });
}

mmae_status mmae_synth(const char* options_json, const char* out_dir, char** out_summary_json) {
  if (!options_json || !out_dir) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] {
    const auto options = parse_synth_options(parse_json(options_json, "synth options"));
    const auto s = mmae::data::write_synthetic_dataset(options, out_dir);
    if (out_summary_json) {
      *out_summary_json = dup_string(json{{"train_manifest", s.train_manifest.string()},
                                          {"test_manifest", s.test_manifest.string()},
                                          {"manifest", s.all_manifest.string()},
                                          {"n_train", s.n_train},
                                          {"n_test_normal", s.n_test_normal},
                                          {"n_test_abnormal", s.n_test_abnormal}}
                                         .dump());
    }
  });
}

mmae_status mmae_import(const char* dir, const char* out_dir, double test_normal_fraction, uint64_t seed,
                        char** out_summary_json) {
  if (!dir || !out_dir) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] {
    const auto s = mmae::data::import_directory(dir, out_dir, test_normal_fraction, seed);
    if (out_summary_json) {
      *out_summary_json = dup_string(json{{"train_manifest", s.train_manifest.string()},
                                          {"test_manifest", s.test_manifest.string()},
                                          {"n_train", s.n_train},
                                          {"n_test_normal", s.n_test_normal},
                                          {"n_test_abnormal", s.n_test_abnormal},
                                          {"skipped", s.skipped}}
                                         .dump());
    }
  });
}

mmae_status mmae_model_create(const char* config_json, uint64_t seed, mmae_model** out) {
  if (!config_json || !out) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  *out = nullptr;
  return guarded([&] {
    const auto cfg = mmae::app::parse_run_config(config_json);
    auto* m = new mmae_model;
    m->checkpoint.config = cfg.model;
    m->checkpoint.params = mmae::model::init_params(cfg.model, seed);
    m->checkpoint.extra["infer"] = cfg.infer;
    m->infer = cfg.infer;
    *out = m;
  });
}

mmae_status mmae_model_load(const char* path, mmae_model** out) {
  if (!path || !out) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  *out = nullptr;
  return guarded([&] {
    auto* m = new mmae_model;
    try {
      m->checkpoint = mmae::model::load_checkpoint(path);
      m->infer = stored_infer(m->checkpoint);
    } catch (...) {
      delete m;
      throw;
    }
    *out = m;
  });
}

mmae_status mmae_model_save(const mmae_model* model, const char* path) {
  if (!model || !path) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] {
    mmae::model::Checkpoint c = model->checkpoint;
    c.extra["infer"] = model->infer;
    mmae::model::save_checkpoint(c, path);
  });
}

void mmae_model_free(mmae_model* model) { delete model; }

mmae_status mmae_model_config(const mmae_model* model, char** out_json) {
  if (!model || !out_json) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] { *out_json = dup_string(json{{"model", model->checkpoint.config}, {"infer", model->infer}}.dump(2)); });
}

mmae_status mmae_model_param_count(const mmae_model* model, uint64_t* out) {
  if (!model || !out) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] { *out = mmae::model::count_parameters(model->checkpoint.config); });
}

mmae_status mmae_model_flops(const mmae_model* model, char** out_json) {
  if (!model || !out_json) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] {
    const auto& cfg = model->checkpoint.config;
    const auto f = mmae::model::estimate_flops(cfg);
    *out_json = dup_string(json{{"unit", "multiply-accumulate"},
                                {"patch_embed", f.patch_embed},
                                {"encoder", f.encoder},
                                {"decoder_proj", f.decoder_proj},
                                {"decoder", f.decoder},
                                {"output_proj", f.output_proj},
                                {"encoder_tokens", f.encoder_tokens},
                                {"decoder_tokens", f.decoder_tokens},
                                {"per_pass", f.per_pass()},
                                {"regions", cfg.regions()},
                                {"passes", model->infer.passes},
                                {"inference_total", f.inference_total(cfg.regions(), model->infer.passes)}}
                               .dump(2));
  });
}

mmae_status mmae_model_set_infer(mmae_model* model, const char* infer_json) {
  if (!model || !infer_json) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] {
    auto infer = model->infer;
    mmae::train::from_json(parse_json(infer_json, "infer settings"), infer);
    infer.validate();
    model->infer = infer;
  });
}

mmae_status mmae_model_hash(const mmae_model* model, char** out_hex) {
  if (!model || !out_hex) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] { *out_hex = dup_string(mmae::model::checkpoint_hash(model->checkpoint)); });
}

mmae_status mmae_train(const char* config_json, const char* manifest_path, const char* out_checkpoint,
                       const char* history_path, mmae_epoch_callback on_epoch, void* user, char** out_summary_json) {
  if (!config_json || !manifest_path || !out_checkpoint) {
    return fail(MMAE_ERR_INVALID_ARGUMENT, "config, manifest and output path must not be NULL");
  }
  return guarded([&] {
    const auto cfg = mmae::app::parse_run_config(config_json);
    const auto records = load_checked(manifest_path, cfg.model, &cfg.data);
    const fs::path out(out_checkpoint);
    auto callback = [&](const mmae::train::EpochStats& e, const mmae::model::ModelParams<float>& params) {
      if (on_epoch) on_epoch(e.epoch, e.mean_loss, e.lr, user);
      if (cfg.train.checkpoint_every > 0 && e.epoch % cfg.train.checkpoint_every == 0 && e.epoch < cfg.train.epochs) {
        mmae::model::Checkpoint snap{cfg.model, params, json{{"infer", cfg.infer}}};
        mmae::model::save_checkpoint(snap, out.string() + ".epoch" + std::to_string(e.epoch));
      }
    };
    auto result = mmae::train::fit(records, cfg.model, cfg.train, callback);
    result.checkpoint.extra["infer"] = cfg.infer;
    result.checkpoint.extra["data"] = json(cfg)["data"];
    mmae::model::save_checkpoint(result.checkpoint, out);
    if (history_path) write_text(history_path, mmae::train::history_jsonl(result.history));
    if (out_summary_json) {
      json s{{"records", records.size()},
             {"epochs", result.history.size()},
             {"parameters", mmae::model::count_parameters(cfg.model)},
             {"checkpoint", out.string()},
             {"checkpoint_hash", mmae::model::checkpoint_hash(result.checkpoint)}};
      if (!result.history.empty()) {
        s["first_loss"] = result.history.front().mean_loss;
        s["final_loss"] = result.history.back().mean_loss;
      }
      *out_summary_json = dup_string(s.dump());
    }
  });
}

mmae_status mmae_score(const mmae_model* model, const mmae_record* record, mmae_report** out) {
  if (!model || !record || !out) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  *out = nullptr;
  return guarded([&] {
    const auto seed = mmae::train::record_seed(model->infer, record->record.id);
    *out = new mmae_report{mmae::train::anomaly_score(model->checkpoint, record->record, model->infer, seed)};
  });
}

double mmae_report_sample_score(const mmae_report* report) { return report ? report->report.sample_score : 0.0; }

const double* mmae_report_point_scores(const mmae_report* report, size_t* leads, size_t* samples) {
  if (!report) return nullptr;
  if (leads) *leads = report->report.point_scores.rows();
  if (samples) *samples = report->report.point_scores.cols();
  return report->report.point_scores.data().data();
}

mmae_status mmae_report_json(const mmae_report* report, int include_points, char** out_json) {
  if (!report || !out_json) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] { *out_json = dup_string(mmae::train::report_to_json(report->report, include_points != 0).dump()); });
}

mmae_status mmae_report_svg(const mmae_report* report, const mmae_record* record, const char* leads,
                            size_t window_begin, size_t window_end, char** out_svg) {
  if (!report || !record || !out_svg) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] {
    mmae::app::SvgOptions o;
    if (leads && *leads) o.leads = mmae::app::parse_lead_list(leads, record->record.leads());
    o.window_begin = window_begin;
    o.window_end = window_end;
    *out_svg = dup_string(mmae::app::render_localization_svg(record->record, report->report, o));
  });
}

void mmae_report_free(mmae_report* report) { delete report; }

mmae_status mmae_evaluate(const mmae_model* model, const char* manifest_path, int localization, char** out_json) {
  if (!model || !manifest_path || !out_json) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  return guarded([&] {
    const auto records = load_checked(manifest_path, model->checkpoint.config, nullptr);
    const auto r = mmae::train::evaluate(model->checkpoint, records, model->infer, localization != 0);
    *out_json = dup_string(mmae::train::to_json(r).dump(2));
  });
}

mmae_status mmae_gradcheck(char** out_json, int* passed) {
  return guarded([&] {
    const auto r = mmae::app::run_gradcheck_suite();
    if (passed) *passed = r.passed() ? 1 : 0;
    if (out_json) *out_json = dup_string(mmae::app::to_json(r).dump(2));
  });
}

mmae_status mmae_ablate(const char* config_json, const char* base_dir, const char* variants, const double* thetas,
                        size_t n_thetas, const size_t* passes, size_t n_passes, mmae_progress_callback progress,
                        void* user, char** out_json) {
  if (!config_json || !variants || !out_json) return fail(MMAE_ERR_INVALID_ARGUMENT, "arguments must not be NULL");
  if ((n_thetas && !thetas) || (n_passes && !passes)) return fail(MMAE_ERR_INVALID_ARGUMENT, "sweep array is NULL");
  return guarded([&] {
    mmae::app::AblationRequest req;
    req.base = mmae::app::parse_run_config(config_json);
    req.variants.clear();
    std::stringstream ss(variants);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) req.variants.push_back(item);
    }
    req.thetas.assign(thetas, thetas + n_thetas);
    req.passes.assign(passes, passes + n_passes);
    auto resolve = [&](const std::string& p) {
      mmae::require(!p.empty(), mmae::ErrorCode::Config, "ablation needs data.train_manifest and data.test_manifest");
      fs::path path(p);
      return (path.is_relative() && base_dir) ? fs::path(base_dir) / path : path;
    };
    const auto train = load_checked(resolve(req.base.data.train_manifest), req.base.model, &req.base.data);
    const auto test = load_checked(resolve(req.base.data.test_manifest), req.base.model, &req.base.data);
    mmae::app::ProgressFn note;
    if (progress) note = [&](const std::string& m) { progress(m.c_str(), user); };
    *out_json = dup_string(mmae::app::run_ablation(req, train, test, note).dump(2));
  });
}

}  // extern "C"
