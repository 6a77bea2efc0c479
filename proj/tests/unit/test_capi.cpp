#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mmae/mmae.h"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string take(char* s) {
  std::string out = s ? s : "";
  mmae_string_free(s);
  return out;
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("mmae_capi_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

// 2 leads, 100 Hz, 1.6 s: 8 segments of 20 samples.
const char* kConfig = R"({
  "data": {"leads": 2, "fs": 100, "segment_length": 20},
  "model": {"segments": 8, "region_length": 4, "region_offsets": [0, 4], "embed_dim": 8, "decoder_dim": 8,
            "depth": 1, "encoder_heads": 2, "decoder_heads": 2},
  "train": {"batch_size": 4, "epochs": 2, "warmup_epochs": 0, "seed": 1},
  "infer": {"passes": 2}
})";

TEST(CApi, StatusNamesAndErrors) {
  EXPECT_STREQ(mmae_status_name(MMAE_OK), "ok");
  EXPECT_NE(std::string(mmae_version()), "");
  mmae_record* r = nullptr;
  EXPECT_EQ(mmae_record_load("/nonexistent/x.ecgb", &r), MMAE_ERR_IO);
  EXPECT_EQ(r, nullptr);
  EXPECT_NE(std::string(mmae_last_error()), "");
  EXPECT_EQ(mmae_record_load(nullptr, &r), MMAE_ERR_INVALID_ARGUMENT);
  mmae_record_free(nullptr);
  mmae_model_free(nullptr);
  mmae_report_free(nullptr);
}

TEST(CApi, ConfigDefaultsAndValidation) {
  char* out = nullptr;
  ASSERT_EQ(mmae_config_default(&out), MMAE_OK);
  const json d = json::parse(take(out));
  EXPECT_EQ(d["model"]["embed_dim"], 64);
  ASSERT_EQ(mmae_config_normalize(R"({"model": {"depth": 2}})", &out), MMAE_OK);
  EXPECT_EQ(json::parse(take(out))["model"]["depth"], 2);
  EXPECT_EQ(mmae_config_normalize(R"({"model": {"unknown": 1}})", &out), MMAE_ERR_CONFIG);
  EXPECT_EQ(mmae_config_normalize("{", &out), MMAE_ERR_CONFIG);
}

TEST(CApi, PaperModelCounts) {
  mmae_model* m = nullptr;
  ASSERT_EQ(mmae_model_create("{}", 1, &m), MMAE_OK);
  std::uint64_t n = 0;
  ASSERT_EQ(mmae_model_param_count(m, &n), MMAE_OK);
  EXPECT_EQ(n, 403484u);
  char* out = nullptr;
  ASSERT_EQ(mmae_model_flops(m, &out), MMAE_OK);
  EXPECT_FALSE(json::parse(take(out)).empty());
  ASSERT_EQ(mmae_model_hash(m, &out), MMAE_OK);
  EXPECT_EQ(take(out).size(), 16u);
  EXPECT_EQ(mmae_model_set_infer(m, R"({"passes": 0})"), MMAE_ERR_CONFIG);
  mmae_model_free(m);
}

TEST(CApi, SynthTrainScoreEvaluate) {
  TempDir tmp;
  char* out = nullptr;
  const std::string data = (tmp.path / "data").string();
  ASSERT_EQ(mmae_synth(R"({"n_normal": 8, "n_abnormal": 3, "n_test_normal": 3, "leads": 2, "fs": 100,
                           "duration": 1.6, "seed": 2})",
                       data.c_str(), &out),
            MMAE_OK)
      << mmae_last_error();
  const json summary = json::parse(take(out));
  EXPECT_EQ(summary["n_test_abnormal"], 3);

  std::size_t epochs_seen = 0;
  auto on_epoch = [](size_t, double loss, double, void* user) {
    EXPECT_TRUE(std::isfinite(loss));
    ++*static_cast<std::size_t*>(user);
  };
  const std::string ckpt = (tmp.path / "model.ckpt").string();
  const std::string history = (tmp.path / "history.jsonl").string();
  ASSERT_EQ(mmae_train(kConfig, (data + "/train.json").c_str(), ckpt.c_str(), history.c_str(), on_epoch, &epochs_seen,
                       &out),
            MMAE_OK)
      << mmae_last_error();
  mmae_string_free(out);
  EXPECT_EQ(epochs_seen, 2u);
  EXPECT_TRUE(fs::exists(history));

  mmae_model* model = nullptr;
  ASSERT_EQ(mmae_model_load(ckpt.c_str(), &model), MMAE_OK);
  const json test = json::parse(std::ifstream(data + "/test.json"));
  const auto entries = test.contains("records") ? test["records"] : test;
  ASSERT_FALSE(entries.empty());

  mmae_record* record = nullptr;
  const std::string abnormal = data + "/" + entries.back()["path"].get<std::string>();
  ASSERT_EQ(mmae_record_load(abnormal.c_str(), &record), MMAE_OK) << mmae_last_error();
  size_t leads = 0, samples = 0;
  uint32_t fs_hz = 0;
  ASSERT_EQ(mmae_record_shape(record, &leads, &samples, &fs_hz), MMAE_OK);
  EXPECT_EQ(leads, 2u);
  EXPECT_EQ(samples, 160u);
  ASSERT_EQ(mmae_record_info(record, &out), MMAE_OK);
  EXPECT_EQ(json::parse(take(out))["has_mask"], true);

  mmae_report* report = nullptr;
  ASSERT_EQ(mmae_score(model, record, &report), MMAE_OK) << mmae_last_error();
  EXPECT_GT(mmae_report_sample_score(report), 0.0);
  size_t k = 0, q = 0;
  ASSERT_NE(mmae_report_point_scores(report, &k, &q), nullptr);
  EXPECT_EQ(k * q, 320u);
  ASSERT_EQ(mmae_report_json(report, 0, &out), MMAE_OK);
  EXPECT_EQ(json::parse(take(out))["breakdown"].size(), 4u);
  ASSERT_EQ(mmae_report_svg(report, record, "1", 0, 0, &out), MMAE_OK);
  EXPECT_NE(take(out).find("<polyline"), std::string::npos);
  EXPECT_EQ(mmae_report_svg(report, record, "", 50, 50, &out), MMAE_ERR_CONFIG);

  ASSERT_EQ(mmae_evaluate(model, (data + "/test.json").c_str(), 1, &out), MMAE_OK) << mmae_last_error();
  const json eval = json::parse(take(out));
  EXPECT_TRUE(eval.contains("detection_auroc"));
  EXPECT_TRUE(eval.contains("localization_auroc"));

  EXPECT_EQ(mmae_train(kConfig, (data + "/test.json").c_str(), ckpt.c_str(), nullptr, nullptr, nullptr, &out),
            MMAE_ERR_VALIDATION);

  mmae_report_free(report);
  mmae_record_free(record);
  mmae_model_free(model);
}

}  // namespace
