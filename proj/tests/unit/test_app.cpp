#include <gtest/gtest.h>

#include <regex>

#include "app/ablation.hpp"
#include "app/run_config.hpp"
#include "app/svg.hpp"
#include "data/synth.hpp"

namespace {

using namespace mmae::app;
using mmae::Error;
using mmae::ErrorCode;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an mmae::Error";
  return ErrorCode::Config;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

TEST(RunConfig, DefaultsRoundTrip) {
  RunConfig c;
  nlohmann::json j = c;
  auto back = parse_run_config(j.dump());
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.model.embed_dim, 64u);
  EXPECT_EQ(back.train.batch_size, 256u);
}

TEST(RunConfig, OverridesAndErrors) {
  auto c = parse_run_config(R"({"model": {"depth": 2, "ablation": {"streams": "local_only"}},
                                "train": {"epochs": 5, "warmup_epochs": 1}, "infer": {"passes": 3}})");
  EXPECT_EQ(c.model.depth, 2u);
  EXPECT_EQ(c.model.ablation.streams, mmae::model::StreamMode::LocalOnly);
  EXPECT_EQ(c.infer.passes, 3u);
  nlohmann::json j = c;
  EXPECT_EQ(parse_run_config(j.dump()), c);

  EXPECT_EQ(code_of([] { parse_run_config(R"({"model": {"depht": 2}})"); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_run_config(R"({"model": {"embed_dim": 60}})"); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_run_config(R"({"infer": {"passes": 0}})"); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_run_config(R"({"data": {"leads": 12}, "model": {"leads": 3}})"); }),
            ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_run_config("{not json"); }), ErrorCode::Config);
}

class SvgTest : public ::testing::Test {
 protected:
  void SetUp() override {
    mmae::data::SynthConfig cfg;
    cfg.leads = mmae::data::default_lead_amplitudes(3);
    cfg.seed = 4;
    record = mmae::data::inject_anomaly(mmae::data::synth_normal(cfg), mmae::data::AnomalyKind::StShift, 5);
    report.id = record.id;
    report.point_scores = mmae::tensor::Tensor<double>({record.leads(), record.samples()});
    for (std::size_t k = 0; k < record.leads(); ++k)
      for (std::size_t q = 0; q < record.samples(); ++q) report.point_scores(k, q) = double((q * 7 + k) % 101);
  }
  mmae::data::EcgRecord record;
  mmae::train::AnomalyReport report;
};

TEST_F(SvgTest, OnePolylinePerSelectedLead) {
  const auto svg = render_localization_svg(record, report, {});
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_EQ(count(svg, "<svg "), 1u);
  EXPECT_EQ(count(svg, "</svg>"), 1u);
  EXPECT_EQ(count(svg, "<polyline"), 3u);
  EXPECT_EQ(count(svg, "<g "), count(svg, "</g>"));
  EXPECT_GE(count(svg, "class=\"truth\""), 1u);

  SvgOptions o;
  o.leads = {1};
  o.window_begin = 100;
  o.window_end = 400;
  const auto one = render_localization_svg(record, report, o);
  EXPECT_EQ(count(one, "<polyline"), 1u);
  EXPECT_EQ(count(one, "data-lead=\"lead2\""), 1u);
}

TEST_F(SvgTest, StripCoversWindowContiguously) {
  SvgOptions o;
  o.leads = {0};
  o.window_begin = 50;
  o.window_end = 900;
  const auto svg = render_localization_svg(record, report, o);
  std::regex rect("class=\"score\" data-level=\"(\\d)\" data-begin=\"(\\d+)\" data-end=\"(\\d+)\"");
  std::size_t expected = 50;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), rect); it != std::sregex_iterator(); ++it) {
    EXPECT_EQ(std::stoul((*it)[2]), expected);
    expected = std::stoul((*it)[3]);
  }
  EXPECT_EQ(expected, 900u);
}

TEST_F(SvgTest, ZeroScoresGiveOneLowestLevelRun) {
  report.point_scores.fill(0);
  SvgOptions o;
  o.leads = {2};
  const auto svg = render_localization_svg(record, report, o);
  EXPECT_EQ(count(svg, "class=\"score\""), 1u);
  EXPECT_EQ(count(svg, "data-level=\"0\""), 1u);
}

TEST_F(SvgTest, DecilesAreBoundedAndMonotone) {
  const auto levels = score_deciles(report.point_scores);
  ASSERT_EQ(levels.size(), report.point_scores.size());
  const auto s = report.point_scores.data();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    EXPECT_LE(levels[i], 9);
    for (std::size_t j = 0; j < levels.size(); j += 97) {
      if (s[i] < s[j]) {
        EXPECT_LE(levels[i], levels[j]);
      }
    }
  }
}

TEST_F(SvgTest, InvalidRequestsAreRejected) {
  SvgOptions o;
  o.window_begin = 300;
  o.window_end = 300;
  EXPECT_EQ(code_of([&] { render_localization_svg(record, report, o); }), ErrorCode::Config);
  o.window_begin = 0;
  o.window_end = record.samples() + 1;
  EXPECT_EQ(code_of([&] { render_localization_svg(record, report, o); }), ErrorCode::Config);
  EXPECT_EQ(parse_lead_list("II,V1", 12), (std::vector<std::size_t>{1, 6}));
  EXPECT_EQ(parse_lead_list("0,6", 12), (std::vector<std::size_t>{0, 6}));
  EXPECT_EQ(code_of([] { parse_lead_list("V7", 12); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_lead_list("12", 12); }), ErrorCode::Config);
}

TEST(Ablation, VariantsToggleOneSwitch) {
  for (const auto& v : known_variants()) {
    mmae::model::ModelConfig c;
    apply_variant(c, v);
    c.validate();
    const int changes = int(c.ablation.streams != mmae::model::StreamMode::Both) +
                        int(c.ablation.shared_local_positions) + int(c.ablation.single_pool_mask) +
                        int(c.ablation.loss_all_segments);
    EXPECT_EQ(changes, v == "full" ? 0 : 1) << v;
  }
  mmae::model::ModelConfig c;
  EXPECT_EQ(code_of([&] { apply_variant(c, "no_decoder"); }), ErrorCode::Config);
}

TEST(Ablation, SmallRunProducesAllSections) {
  mmae::data::SynthDatasetOptions o;
  o.n_normal = 10;
  o.n_abnormal = 3;
  o.n_test_normal = 3;
  o.leads = 2;
  o.fs = 100;
  o.duration = 1.6;
  auto records = mmae::data::synthesize_records(o);
  std::vector<mmae::data::EcgRecord> train(records.begin(), records.begin() + 7);
  std::vector<mmae::data::EcgRecord> test(records.begin() + 7, records.end());

  AblationRequest req;
  req.base.data.leads = 2;
  req.base.data.fs = 100;
  req.base.data.segment_length = 20;
  auto& m = req.base.model;
  m.leads = 2;
  m.segment_length = 20;
  m.segments = 8;
  m.region_offsets = {0, 4};
  m.embed_dim = m.decoder_dim = 8;
  m.depth = 1;
  m.encoder_heads = m.decoder_heads = 2;
  req.base.train.batch_size = 4;
  req.base.train.epochs = 1;
  req.base.train.warmup_epochs = 0;
  req.variants = {"full", "global_only"};
  req.thetas = {0.5};
  req.passes = {1, 2};
  std::vector<std::string> log;
  auto out = run_ablation(req, train, test, [&](const std::string& s) { log.push_back(s); });
  EXPECT_TRUE(out["variants"].contains("full"));
  EXPECT_TRUE(out["variants"].contains("global_only"));
  EXPECT_EQ(out["theta_sweep"].size(), 1u);
  EXPECT_EQ(out["H_sweep"]["points"].size(), 2u);
  EXPECT_EQ(out["H_sweep"]["checkpoint_hash"], out["variants"]["full"]["checkpoint_hash"]);
  EXPECT_NE(out["variants"]["full"]["checkpoint_hash"], out["variants"]["global_only"]["checkpoint_hash"]);
  EXPECT_FALSE(log.empty());
  req.variants = {"bogus"};
  EXPECT_EQ(code_of([&] { run_ablation(req, train, test); }), ErrorCode::Config);
}

}  // namespace
