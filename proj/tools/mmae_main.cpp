// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmae/mmae.h"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Carries a library status up to main().
struct Failure {
  mmae_status status;
  std::string message;
};

void check(mmae_status s) {
  if (s != MMAE_OK) throw Failure{s, mmae_last_error()};
}

void usage_error(const std::string& message) { throw Failure{MMAE_ERR_CONFIG, message}; }

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { mmae_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct RecordDeleter {
  void operator()(mmae_record* r) const { mmae_record_free(r); }
};
struct ModelDeleter {
  void operator()(mmae_model* m) const { mmae_model_free(m); }
};
struct ReportDeleter {
  void operator()(mmae_report* r) const { mmae_report_free(r); }
};
using RecordPtr = std::unique_ptr<mmae_record, RecordDeleter>;
using ModelPtr = std::unique_ptr<mmae_model, ModelDeleter>;
using ReportPtr = std::unique_ptr<mmae_report, ReportDeleter>;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{MMAE_ERR_IO, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{MMAE_ERR_IO, "cannot write " + path};
  out << text;
  if (!out) throw Failure{MMAE_ERR_IO, "short write to " + path};
}

json parse_config_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    usage_error(origin + " is not valid JSON: " + e.what());
  }
  return {};
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("MMAE_SEED");
  if (!s || !*s) return std::nullopt;
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    usage_error(std::string("MMAE_SEED is not an unsigned integer: ") + s);
  }
  return std::nullopt;
}

void apply_env_threads() {
  const char* s = std::getenv("MMAE_THREADS");
  if (!s || !*s) return;
  try {
    mmae_set_threads(static_cast<unsigned>(std::stoul(s)));
  } catch (const std::exception&) {
    usage_error(std::string("MMAE_THREADS is not an unsigned integer: ") + s);
  }
}

// Base config from a file (or library defaults) with MMAE_SEED applied to
// the train and infer seeds.
json load_config(const std::string& path) {
  json cfg = json::object();
  if (!path.empty()) cfg = parse_config_text(read_text(path), path);
  if (!cfg.is_object()) usage_error("config must be a JSON object");
  if (auto seed = env_seed()) {
    cfg["train"]["seed"] = *seed;
    cfg["infer"]["seed"] = *seed;
  }
  return cfg;
}

std::string base_dir_of(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

ModelPtr load_model(const std::string& path, std::optional<std::size_t> passes) {
  mmae_model* m = nullptr;
  check(mmae_model_load(path.c_str(), &m));
  ModelPtr model(m);
  json infer = json::object();
  if (passes) infer["passes"] = *passes;
  if (auto seed = env_seed()) infer["seed"] = *seed;
  if (!infer.empty()) check(mmae_model_set_infer(model.get(), infer.dump().c_str()));
  return model;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !is.eof()) usage_error(std::string("bad value '") + item + "' in " + what);
    out.push_back(v);
  }
  return out;
}

int run_synth(const std::string& out, const json& options) {
  OwnedString summary;
  check(mmae_synth(options.dump().c_str(), out.c_str(), &summary.p));
  std::cout << summary.str() << '\n';
  return kExitOk;
}

void print_epoch(std::size_t epoch, double loss, double lr, void*) {
  std::fprintf(stderr, "epoch %zu  loss %.6f  lr %.3g\n", epoch, loss, lr);
}

void print_progress(const char* message, void*) { std::fprintf(stderr, "%s\n", message); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale masked autoencoder for multi-lead ECG anomaly detection", "mmae"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mmae_version());

  std::string synth_out;
  json synth_opts = json::object();
  std::size_t n_normal = 100, n_abnormal = 20, n_test_normal = 20, leads = 12;
  std::uint32_t fs = 250;
  double duration = 5.0;
  std::optional<double> noise_std, rr_jitter, wander, hr_min, hr_max;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic ECG dataset with train/test manifests");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n-normal", n_normal, "Normal training records")->capture_default_str();
  synth->add_option("--n-abnormal", n_abnormal, "Abnormal test records")->capture_default_str();
  synth->add_option("--n-test-normal", n_test_normal, "Normal test records")->capture_default_str();
  synth->add_option("--fs", fs, "Sampling rate in Hz")->capture_default_str();
  synth->add_option("--duration", duration, "Record length in seconds")->capture_default_str();
  synth->add_option("--leads", leads, "Lead count")->capture_default_str();
  synth->add_option("--hr-min", hr_min, "Lowest per-record heart rate in bpm");
  synth->add_option("--hr-max", hr_max, "Highest per-record heart rate in bpm");
  synth->add_option("--noise-std", noise_std, "White-noise level in mV");
  synth->add_option("--rr-jitter", rr_jitter, "Beat-to-beat RR variation as a fraction");
  synth->add_option("--wander", wander, "Baseline-wander amplitude in mV");
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();

  std::string config_path, data_path, ckpt_out, history_path;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<unsigned> threads;
  bool deterministic = false;
  auto* train = app.add_subcommand("train", "Train a model on the normal records of a manifest");
  train->add_option("--config", config_path, "Run configuration JSON")->check(CLI::ExistingFile);
  train->add_option("--data", data_path, "Training manifest")->required()->check(CLI::ExistingFile);
  train->add_option("--out", ckpt_out, "Checkpoint to write")->required();
  train->add_option("--history", history_path, "Per-epoch history (JSON lines)");
  train->add_option("--epochs", epochs, "Override train.epochs");
  train->add_option("--batch-size", batch_size, "Override train.batch_size");
  train->add_option("--threads", threads, "Worker threads (overrides MMAE_THREADS)");
  train->add_flag("--deterministic", deterministic, "Single-threaded, bit-reproducible run");

  std::string model_path, input_path, report_path, svg_path, lead_list, window;
  std::optional<std::size_t> passes;
  auto* score = app.add_subcommand("score", "Score one record");
  score->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  score->add_option("--input", input_path, "Record (.ecgb or .csv)")->required()->check(CLI::ExistingFile);
  score->add_option("--report", report_path, "Report JSON to write")->required();
  score->add_option("--svg", svg_path, "Localization figure to write");
  score->add_option("--leads", lead_list, "Leads for the figure, e.g. II,V1 or 1,6");
  score->add_option("--window", window, "Sample window A:B for the figure");
  score->add_option("--passes", passes, "Override infer.passes (H)");

  std::string manifest_path;
  bool localization = false;
  auto* eval = app.add_subcommand("eval", "Detection and localization AUROC over a labeled manifest");
  eval->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--manifest", manifest_path, "Test manifest")->required()->check(CLI::ExistingFile);
  eval->add_option("--report", report_path, "Evaluation JSON to write")->required();
  eval->add_flag("--localization", localization, "Also compute point-level AUROC");
  eval->add_option("--passes", passes, "Override infer.passes (H)");

  bool use_double = false;
  std::string gradcheck_report;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  gradcheck->add_flag("--double", use_double, "Run in double precision (always the case)");
  gradcheck->add_option("--report", gradcheck_report, "Write the suite result as JSON");

  std::string variants = "full", thetas, h_values, ablate_out;
  auto* ablate = app.add_subcommand("ablate", "Train and compare ablation variants");
  ablate->add_option("--config", config_path, "Run configuration with data manifests")
      ->required()
      ->check(CLI::ExistingFile);
  ablate->add_option("--variants", variants, "Comma-separated variants")->capture_default_str();
  ablate->add_option("--theta", thetas, "Mask-ratio sweep, e.g. 0.15,0.25,0.75");
  ablate->add_option("--H", h_values, "Pass-count sweep, e.g. 1,2,4,8");
  ablate->add_option("--out", ablate_out, "Result JSON to write")->required();

  std::string import_dir, import_out;
  double test_fraction = 0.2;
  std::uint64_t import_seed = 0;
  auto* import = app.add_subcommand("import", "Build manifests from a directory of exported records");
  import->add_option("--dir", import_dir, "Directory with .ecgb/.csv records and sidecars")
      ->required()
      ->check(CLI::ExistingDirectory);
  import->add_option("--out-dir", import_out, "Where to write train.json and test.json")->required();
  import->add_option("--test-fraction", test_fraction, "Share of normal records held out")->capture_default_str();
  import->add_option("--seed", import_seed, "Split seed")->capture_default_str();

  auto* inspect = app.add_subcommand("inspect", "Print a checkpoint's configuration, size and cost");
  inspect->add_option("--model", model_path, "Checkpoint")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    std::cout << mmae_version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    apply_env_threads();
    if (threads) mmae_set_threads(*threads);

    if (*synth) {
      synth_opts = {{"n_normal", n_normal}, {"n_abnormal", n_abnormal}, {"n_test_normal", n_test_normal},
                    {"fs", fs},             {"duration", duration},     {"leads", leads},
                    {"seed", synth_seed}};
      if (hr_min) synth_opts["heart_rate_min"] = *hr_min;
      if (hr_max) synth_opts["heart_rate_max"] = *hr_max;
      if (noise_std) synth_opts["noise_std"] = *noise_std;
      if (rr_jitter) synth_opts["rr_jitter"] = *rr_jitter;
      if (wander) synth_opts["wander_amplitude"] = *wander;
      return run_synth(synth_out, synth_opts);
    }

    if (*train) {
      json cfg = load_config(config_path);
      if (epochs) cfg["train"]["epochs"] = *epochs;
      if (batch_size) cfg["train"]["batch_size"] = *batch_size;
      if (deterministic) {
        cfg["train"]["deterministic"] = true;
        mmae_set_threads(1);
      }
      OwnedString summary;
      check(mmae_train(cfg.dump().c_str(), data_path.c_str(), ckpt_out.c_str(),
                       history_path.empty() ? nullptr : history_path.c_str(), print_epoch, nullptr, &summary.p));
      std::cout << summary.str() << '\n';
      return kExitOk;
    }

    if (*score) {
      std::size_t begin = 0, end = 0;
      if (!window.empty()) {
        const auto colon = window.find(':');
        if (colon == std::string::npos) usage_error("--window expects A:B");
        try {
          begin = std::stoul(window.substr(0, colon));
          end = std::stoul(window.substr(colon + 1));
        } catch (const std::exception&) {
          usage_error("--window expects two sample indices A:B");
        }
        if (end <= begin) usage_error("--window is empty");
      }
      auto model = load_model(model_path, passes);
      mmae_record* r = nullptr;
      check(mmae_record_load(input_path.c_str(), &r));
      RecordPtr record(r);
      mmae_report* rep = nullptr;
      check(mmae_score(model.get(), record.get(), &rep));
      ReportPtr report(rep);
      OwnedString text;
      check(mmae_report_json(report.get(), 1, &text.p));
      write_text(report_path, text.str());
      if (!svg_path.empty()) {
        OwnedString svg;
        check(mmae_report_svg(report.get(), record.get(), lead_list.c_str(), begin, end, &svg.p));
        write_text(svg_path, svg.str());
      }
      std::printf("%.9g\n", mmae_report_sample_score(report.get()));
      return kExitOk;
    }

    if (*eval) {
      auto model = load_model(model_path, passes);
      OwnedString text;
      check(mmae_evaluate(model.get(), manifest_path.c_str(), localization ? 1 : 0, &text.p));
      write_text(report_path, text.str() + "\n");
      const json r = json::parse(text.str());
      std::printf("detection_auroc %.6f\n", r.at("detection_auroc").get<double>());
      if (r.contains("localization_auroc")) {
        std::printf("localization_auroc %.6f\n", r.at("localization_auroc").get<double>());
      }
      return kExitOk;
    }

    if (*gradcheck) {
      OwnedString text;
      int passed = 0;
      check(mmae_gradcheck(&text.p, &passed));
      const json r = json::parse(text.str());
      for (const auto& c : r.at("checks")) {
        std::printf("%-30s max_rel_err %.3e  tol %.0e  %s\n", c.at("name").get<std::string>().c_str(),
                    c.at("max_rel_err").get<double>(), c.at("tolerance").get<double>(),
                    c.at("passed").get<bool>() ? "ok" : "FAIL");
      }
      if (!gradcheck_report.empty()) write_text(gradcheck_report, text.str() + "\n");
      return passed ? kExitOk : kExitRuntime;
    }

    if (*ablate) {
      const json cfg = load_config(config_path);
      const auto theta_list = parse_list<double>(thetas, "--theta");
      const auto h_list = parse_list<std::size_t>(h_values, "--H");
      OwnedString text;
      const std::string base = base_dir_of(config_path);
      check(mmae_ablate(cfg.dump().c_str(), base.c_str(), variants.c_str(), theta_list.data(), theta_list.size(),
                        h_list.data(), h_list.size(), print_progress, nullptr, &text.p));
      write_text(ablate_out, text.str() + "\n");
      return kExitOk;
    }

    if (*import) {
      OwnedString summary;
      check(mmae_import(import_dir.c_str(), import_out.c_str(), test_fraction, import_seed, &summary.p));
      std::cout << summary.str() << '\n';
      return kExitOk;
    }

    if (*inspect) {
      auto model = load_model(model_path, std::nullopt);
      OwnedString config, flops;
      std::uint64_t params = 0;
      check(mmae_model_config(model.get(), &config.p));
      check(mmae_model_param_count(model.get(), &params));
      check(mmae_model_flops(model.get(), &flops.p));
      const json out{{"parameters", params}, {"flops", json::parse(flops.str())}, {"config", json::parse(config.str())}};
      std::cout << out.dump(2) << '\n';
      return kExitOk;
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return (f.status == MMAE_ERR_CONFIG || f.status == MMAE_ERR_INVALID_ARGUMENT) ? kExitUsage : kExitRuntime;
  }
  return kExitUsage;
}
