#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "app/gradcheck_suite.hpp"
#include "model/checkpoint.hpp"
#include "model/counters.hpp"
#include "model/masking.hpp"
#include "model/mmae.hpp"
#include "tensor/gradcheck.hpp"

namespace {

using namespace mmae::model;
using mmae::Error;
using mmae::ErrorCode;
using mmae::tensor::Tape;
using mmae::tensor::Tensor;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an mmae::Error";
  return ErrorCode::Config;
}

ModelConfig small_config() {
  ModelConfig c;
  c.leads = 3;
  c.segment_length = 4;
  c.segments = 8;
  c.region_length = 4;
  c.region_offsets = {0, 2, 4};
  c.embed_dim = 8;
  c.decoder_dim = 8;
  c.depth = 2;
  c.encoder_heads = 2;
  c.decoder_heads = 2;
  return c;
}

Tensor<double> random_patches(const ModelConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  Tensor<double> p({c.segments, c.patch_size()});
  for (auto& v : p.data()) v = n(rng);
  return p;
}

TEST(Regions, PaperOffsets) {
  RegionSpec spec{{1, 5, 9, 13, 17, 21, 25, 29, 33}, 4};
  auto regions = build_local_regions(40, spec);
  ASSERT_EQ(regions.size(), 9u);
  EXPECT_EQ(regions[0], (std::vector<std::size_t>{2, 3, 4, 5}));
  EXPECT_EQ(regions[8], (std::vector<std::size_t>{34, 35, 36, 37}));
}

TEST(Regions, FullCoverAndBounds) {
  auto all = build_local_regions(6, RegionSpec{{0}, 6});
  EXPECT_EQ(all.front(), (std::vector<std::size_t>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(code_of([] { build_local_regions(40, RegionSpec{{37}, 4}); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { build_local_regions(40, RegionSpec{{5, 5}, 4}); }), ErrorCode::Config);
}

TEST(Masking, PaperCounts) {
  EXPECT_EQ(masked_count(40, 0.25), 10u);
  EXPECT_EQ(masked_count(4, 0.25), 1u);
  EXPECT_EQ(masked_count(40, 0.0), 1u);
  EXPECT_EQ(masked_count(4, 0.0), 1u);
  EXPECT_EQ(masked_count(40, 1.0), 39u);
  EXPECT_EQ(masked_count(4, 1.0), 3u);
  // Half-up versus floor.
  EXPECT_EQ(masked_count(4, 0.375), 2u);
  EXPECT_EQ(masked_count(4, 0.375, Rounding::Floor), 1u);
  EXPECT_EQ(masked_count(20, 0.15), 3u);
  EXPECT_EQ(masked_count(20, 0.35), 7u);
}

TEST(Masking, ClampsHoldForAllRatios) {
  for (std::size_t n : {2u, 3u, 4u, 8u, 40u}) {
    for (int i = 0; i <= 100; ++i) {
      const auto m = masked_count(n, i / 100.0);
      EXPECT_GE(m, 1u);
      EXPECT_LE(m, n - 1);
    }
  }
}

TEST(Masking, InvalidArgumentsAreConfigErrors) {
  Rng rng(1);
  EXPECT_EQ(code_of([&] { sample_mask_plan(1, 2, 0.25, 0, rng); }), ErrorCode::Config);
  EXPECT_EQ(code_of([&] { sample_mask_plan(8, 1, 0.25, 0, rng); }), ErrorCode::Config);
  EXPECT_EQ(code_of([&] { sample_mask_plan(8, 4, 1.5, 0, rng); }), ErrorCode::Config);
}

TEST(Masking, PlansPartitionBothStreams) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const double theta = (trial % 11) / 10.0;
    const std::size_t w = trial % 37;
    auto plan = sample_mask_plan(40, 4, theta, w, rng);
    plan.validate(40, 4);
    EXPECT_EQ(plan.global_masked.size(), masked_count(40, theta));
    EXPECT_EQ(plan.local_masked.size(), masked_count(4, theta));
    std::set<std::size_t> g(plan.global_masked.begin(), plan.global_masked.end());
    g.insert(plan.global_unmasked.begin(), plan.global_unmasked.end());
    EXPECT_EQ(g.size(), 40u);
    for (auto s : plan.local_masked) EXPECT_TRUE(s > w && s <= w + 4);
  }
}

TEST(Masking, BrokenPartitionIsContractError) {
  Rng rng(3);
  auto plan = sample_mask_plan(8, 4, 0.25, 2, rng);
  plan.global_unmasked.push_back(plan.global_masked.front());
  EXPECT_EQ(code_of([&] { plan.validate(8, 4); }), ErrorCode::Contract);
}

double chi_square(const std::vector<double>& counts, double expected) {
  double chi = 0;
  for (double c : counts) chi += (c - expected) * (c - expected) / expected;
  return chi;
}

TEST(Masking, UniformOverIndices) {
  Rng rng(4);
  const int draws = 10000;
  std::vector<double> global(8, 0), local(4, 0);
  for (int i = 0; i < draws; ++i) {
    auto plan = sample_mask_plan(8, 4, 0.25, 3, rng);
    ASSERT_EQ(plan.global_masked.size(), 2u);
    for (auto s : plan.global_masked) global[s - 1] += 1;
    for (auto s : plan.local_masked) local[s - 4] += 1;
  }
  const double expected = draws * 2.0 / 8.0;
  const double sigma = std::sqrt(draws * 0.25 * 0.75);
  for (double c : global) EXPECT_LE(std::abs(c - expected), 3 * sigma);
  // 7 and 3 degrees of freedom at p = 0.001.
  EXPECT_LT(chi_square(global, expected), 24.32);
  EXPECT_LT(chi_square(local, draws / 4.0), 16.27);
}

TEST(Masking, LocalSlotScheduleCoversRegion) {
  Rng rng(5);
  for (std::size_t delta : {2u, 4u, 6u}) {
    for (std::size_t per_pass : {1u, 2u}) {
      if (per_pass >= delta) continue;
      LocalSlotSchedule slots(delta, rng);
      const std::size_t passes = (delta + per_pass - 1) / per_pass;
      std::set<std::size_t> seen;
      for (std::size_t h = 0; h < passes; ++h) {
        auto s = slots.next(per_pass);
        EXPECT_EQ(s.size(), per_pass);
        EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), per_pass);
        seen.insert(s.begin(), s.end());
      }
      EXPECT_EQ(seen.size(), delta);
    }
  }
}

TEST(Masking, SinglePoolPlanCountsOverTheJointPool) {
  Rng rng(6);
  std::size_t empty_local = 0;
  for (int i = 0; i < 200; ++i) {
    auto p = sample_single_pool_plan(8, 4, 0.25, 2, rng);
    EXPECT_EQ(p.global_masked.size() + p.local_masked.size(), masked_count(12, 0.25));
    EXPECT_EQ(p.global_masked.size() + p.global_unmasked.size(), 8u);
    EXPECT_EQ(p.local_masked.size() + p.local_unmasked.size(), 4u);
    empty_local += p.local_masked.empty();
  }
  // One pool means a stream can go unmasked; P = C(8,3)/C(12,3) = 0.25.
  EXPECT_GT(empty_local, 20u);
  EXPECT_LT(empty_local, 90u);
}

TEST(Loss, SinglePoolWithUnmaskedStreamStaysFinite) {
  auto c = small_config();
  c.ablation.single_pool_mask = true;
  auto params = init_params(c, 16).cast<double>();
  auto patches = random_patches(c, 16);
  Rng rng(20);
  for (int i = 0; i < 50; ++i) {
    auto plan = sample_plan_for(c, 2, rng);
    auto l = evaluate_loss(params, c, patches, plan);
    EXPECT_TRUE(std::isfinite(l.total));
    if (plan.local_masked.empty()) {
      EXPECT_EQ(l.l_local, 0.0);
    }
  }
}

TEST(Model, PaperSequenceLengths) {
  ModelConfig c;  // paper configuration
  auto params = init_params(c, 1).cast<double>();
  Rng rng(7);
  auto plan = sample_mask_plan(40, 4, 0.25, 1, rng);
  Tape<double> tape;
  auto bound = bind(tape, params, false);
  Tensor<double> patches({40, 1500}, 0.5);
  auto z = encode(bound, c, patches, plan);
  EXPECT_EQ(z.value().rows(), 34u);
  EXPECT_EQ(z.value().cols(), 64u);
  auto r = decode(bound, c, z, plan);
  EXPECT_EQ(r.decoder_length, 44u);
  EXPECT_EQ(r.values.value().rows(), 11u);
  EXPECT_EQ(r.values.value().cols(), 1500u);
  EXPECT_EQ(std::count(r.local.begin(), r.local.end(), true), 1);
}

TEST(Model, LengthFormulasForAllPlans) {
  auto c = small_config();
  auto params = init_params(c, 2).cast<double>();
  auto patches = random_patches(c, 3);
  Rng rng(8);
  for (int i = 0; i <= 10; ++i) {
    const double theta = i / 10.0;
    for (auto w : c.region_offsets) {
      auto plan = sample_mask_plan(c.segments, c.region_length, theta, w, rng);
      Tape<double> tape;
      auto bound = bind(tape, params, false);
      auto z = encode(bound, c, patches, plan);
      const auto sm = plan.global_masked.size(), rm = plan.local_masked.size();
      EXPECT_EQ(z.value().rows(), 1 + (c.segments - sm) + (c.region_length - rm));
      auto r = decode(bound, c, z, plan);
      EXPECT_EQ(r.decoder_length, c.segments + c.region_length);
      EXPECT_EQ(r.values.value().rows(), sm + rm);
    }
  }
}

TEST(Model, MaximalMaskingLeavesThreeTokens) {
  auto c = small_config();
  auto params = init_params(c, 4).cast<double>();
  Rng rng(9);
  auto plan = sample_mask_plan(c.segments, c.region_length, 1.0, 0, rng);
  Tape<double> tape;
  auto z = encode(bind(tape, params, false), c, random_patches(c, 1), plan);
  EXPECT_EQ(z.value().rows(), 3u);
}

TEST(Model, ZeroResidualBranchesReturnEmbeddings) {
  auto c = small_config();
  auto params = init_params(c, 5).cast<double>();
  for (auto& b : params.encoder) {
    b.out_w.fill(0);
    b.out_b.fill(0);
    b.fc2_w.fill(0);
    b.fc2_b.fill(0);
  }
  auto patches = random_patches(c, 6);
  Rng rng(10);
  auto plan = sample_mask_plan(c.segments, c.region_length, 0.25, 2, rng);
  Tape<double> tape;
  auto z = encode(bind(tape, params, false), c, patches, plan).value();

  // z₀ assembled by hand: aux + e₀, then x·E + b + positional row.
  const std::size_t d = c.embed_dim, p = c.patch_size();
  auto embed = [&](std::size_t s, std::size_t pos_row, std::size_t out_row) {
    for (std::size_t j = 0; j < d; ++j) {
      double v = params.patch_b[j] + params.enc_pos(pos_row, j);
      for (std::size_t i = 0; i < p; ++i) v += patches(s - 1, i) * params.patch_w(i, j);
      EXPECT_NEAR(z(out_row, j), v, 1e-12);
    }
  };
  for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(z(0, j), params.aux[j] + params.enc_pos(0, j), 1e-12);
  std::size_t row = 1;
  for (auto s : plan.global_unmasked) embed(s, s, row++);
  for (auto s : plan.local_unmasked) embed(s, c.segments + (s - plan.region_offset), row++);
  EXPECT_EQ(row, z.rows());
}

TEST(Model, ZeroOutputProjectionGivesZeroReconstruction) {
  auto c = small_config();
  auto params = init_params(c, 7).cast<double>();
  params.out_w.fill(0);
  params.out_b.fill(0);
  Rng rng(11);
  auto plan = sample_mask_plan(c.segments, c.region_length, 0.25, 0, rng);
  Tape<double> tape;
  auto f = forward(bind(tape, params, false), c, random_patches(c, 8), plan);
  for (double v : f.recon.values.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Model, MinimalPlanGivesTwoReconstructions) {
  auto c = small_config();
  auto params = init_params(c, 8).cast<double>();
  Rng rng(12);
  auto plan = sample_mask_plan(c.segments, c.region_length, 0.0, 4, rng);
  Tape<double> tape;
  auto f = forward(bind(tape, params, false), c, random_patches(c, 9), plan);
  EXPECT_EQ(f.recon.values.value().rows(), 2u);
}

TEST(Model, DualEmbeddingRowsAreDisjoint) {
  auto c = small_config();
  for (auto w : c.region_offsets) {
    for (std::size_t s = w + 1; s <= w + c.region_length; ++s) {
      EXPECT_LE(encoder_global_row(s), c.segments);
      EXPECT_GT(encoder_local_row(c, w, s), c.segments);
      EXPECT_LT(decoder_global_row(s), c.segments);
      EXPECT_GE(decoder_local_row(c, w, s), c.segments);
      EXPECT_LT(decoder_local_row(c, w, s), c.segments + c.region_length);
    }
  }
  c.ablation.shared_local_positions = true;
  EXPECT_EQ(encoder_local_row(c, 2, 4), encoder_global_row(4));
  EXPECT_EQ(decoder_local_row(c, 2, 4), decoder_global_row(4));
}

TEST(Model, PlanMismatchIsContractError) {
  auto c = small_config();
  auto params = init_params(c, 9).cast<double>();
  Rng rng(13);
  auto plan = sample_mask_plan(c.segments, c.region_length, 0.25, 0, rng);
  Tape<double> tape;
  auto bound = bind(tape, params, false);
  Tensor<double> wrong({c.segments + 1, c.patch_size()});
  EXPECT_EQ(code_of([&] { encode(bound, c, wrong, plan); }), ErrorCode::Contract);
  auto z = encode(bound, c, random_patches(c, 1), plan);
  auto other = sample_mask_plan(c.segments, c.region_length, 0.75, 0, rng);
  EXPECT_EQ(code_of([&] { decode(bound, c, z, other); }), ErrorCode::Contract);
}

// Loss parts for a reconstruction that copies f(x) exactly, or is offset from it.
TEST(Loss, PerfectReconstructionIsZero) {
  auto c = small_config();
  auto patches = random_patches(c, 10);
  auto params = init_params(c, 10).cast<double>();
  Rng rng(14);
  auto plan = sample_mask_plan(c.segments, c.region_length, 0.25, 2, rng);
  Tape<double> tape;
  auto f = forward(bind(tape, params, false), c, patches, plan);
  Reconstruction<double> perfect = f.recon;
  perfect.values = tape.constant(reconstruction_targets(f.recon, patches, c));
  auto l = reconstruction_loss(perfect, patches, c);
  EXPECT_EQ(l.l_global.value()[0], 0.0);
  EXPECT_EQ(l.l_local.value()[0], 0.0);
  EXPECT_EQ(l.total.value()[0], 0.0);
}

TEST(Loss, MeanReductionAndAdditivity) {
  auto c = small_config();
  auto patches = random_patches(c, 11);
  auto params = init_params(c, 11).cast<double>();
  Rng rng(15);
  auto plan = sample_mask_plan(c.segments, c.region_length, 0.25, 2, rng);
  Tape<double> tape;
  auto f = forward(bind(tape, params, false), c, patches, plan);
  auto targets = reconstruction_targets(f.recon, patches, c);
  // Offset the global rows by √0.5 and the local row by 0.5 everywhere.
  Tensor<double> shifted = targets;
  for (std::size_t r = 0; r < shifted.rows(); ++r) {
    const double off = f.recon.local[r] ? 0.5 : std::sqrt(0.5);
    for (std::size_t j = 0; j < shifted.cols(); ++j) shifted(r, j) += off;
  }
  Reconstruction<double> rec = f.recon;
  rec.values = tape.constant(shifted);
  auto l = reconstruction_loss(rec, patches, c);
  EXPECT_NEAR(l.l_global.value()[0], 0.5, 1e-12);
  EXPECT_NEAR(l.l_local.value()[0], 0.25, 1e-12);
  EXPECT_NEAR(l.total.value()[0], 0.75, 1e-12);
}

TEST(Loss, ConstantTargetWithZeroReconstructionContributesZero) {
  auto c = small_config();
  Tensor<double> patches({c.segments, c.patch_size()}, 2.5);
  auto params = init_params(c, 12).cast<double>();
  params.out_w.fill(0);
  params.out_b.fill(0);
  Rng rng(16);
  auto plan = sample_mask_plan(c.segments, c.region_length, 0.25, 0, rng);
  Tape<double> tape;
  auto f = forward(bind(tape, params, false), c, patches, plan);
  EXPECT_EQ(f.loss.total.value()[0], 0.0);
}

TEST(Loss, ReadsOnlyMaskedTargets) {
  auto c = small_config();
  auto patches = random_patches(c, 13);
  auto params = init_params(c, 13).cast<double>();
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto plan = sample_mask_plan(c.segments, c.region_length, 0.25, c.region_offsets[trial % 3], rng);
    Tape<double> tape;
    auto f = forward(bind(tape, params, false), c, patches, plan);
    std::set<std::size_t> read(plan.global_masked.begin(), plan.global_masked.end());
    read.insert(plan.local_masked.begin(), plan.local_masked.end());
    Tensor<double> altered = patches;
    for (std::size_t s = 1; s <= c.segments; ++s) {
      if (read.count(s)) continue;
      for (std::size_t j = 0; j < c.patch_size(); ++j) altered(s - 1, j) = 1e3 * double(j % 7) - 4.0;
    }
    auto a = reconstruction_loss(f.recon, patches, c);
    auto b = reconstruction_loss(f.recon, altered, c);
    EXPECT_EQ(a.l_global.value()[0], b.l_global.value()[0]);
    EXPECT_EQ(a.l_local.value()[0], b.l_local.value()[0]);
  }
}

TEST(Loss, AblationStreams) {
  auto c = small_config();
  auto patches = random_patches(c, 14);
  auto params = init_params(c, 14).cast<double>();
  Rng rng(18);
  auto plan = sample_mask_plan(c.segments, c.region_length, 0.25, 2, rng);
  c.ablation.streams = StreamMode::GlobalOnly;
  auto g = evaluate_loss(params, c, patches, plan);
  EXPECT_EQ(g.l_local, 0.0);
  EXPECT_GT(g.l_global, 0.0);
  c.ablation.streams = StreamMode::LocalOnly;
  auto l = evaluate_loss(params, c, patches, plan);
  EXPECT_EQ(l.l_global, 0.0);
  EXPECT_GT(l.l_local, 0.0);
  c.ablation.streams = StreamMode::Both;
  c.ablation.loss_all_segments = true;
  Tape<double> tape;
  auto f = forward(bind(tape, params, false), c, patches, plan);
  EXPECT_EQ(f.recon.values.value().rows(), c.segments + c.region_length);
}

TEST(Loss, FloatAndDoubleAgree) {
  auto c = small_config();
  auto params = init_params(c, 15);
  auto patches = random_patches(c, 15);
  Rng rng(19);
  auto plan = sample_mask_plan(c.segments, c.region_length, 0.25, 0, rng);
  auto d = evaluate_loss(params.cast<double>(), c, patches, plan);
  auto f = evaluate_loss(params, c, patches.cast<float>(), plan);
  EXPECT_NEAR(d.total, f.total, 1e-4 * std::max(1.0, d.total));
}

TEST(Gradient, EndToEndMatchesFiniteDifferences) {
  auto result = mmae::app::run_gradcheck_suite(7, 2);
  for (const auto& e : result.entries) {
    if (e.name.rfind("end_to_end", 0) != 0) continue;
    EXPECT_LE(e.max_rel_err, 1e-3) << e.name;
    EXPECT_GT(e.coordinates, 1000u);
  }
}

std::uint64_t hand_count(const ModelConfig& c) {
  const std::uint64_t p = c.patch_size(), d = c.embed_dim, dd = c.decoder_dim, t = c.segments, delta = c.region_length;
  const std::uint64_t r = c.mlp_ratio;
  auto block = [r](std::uint64_t w) {
    return 2 * w + (3 * w * w + 3 * w) + (w * w + w) + 2 * w + (r * w * w + r * w) + (r * w * w + w);
  };
  return (p * d + d) + d + (t + delta + 1) * d + c.depth * block(d) + (d * dd + dd) + dd + (t + delta) * dd +
         block(dd) + (dd * p + p);
}

TEST(Counters, PaperParameterBudget) {
  ModelConfig c;
  EXPECT_EQ(count_parameters(c), 403484u);
  EXPECT_EQ(count_parameters(c), hand_count(c));
  EXPECT_NEAR(double(count_parameters(c)) / 0.398e6, 1.0, 0.05);
  EXPECT_EQ(init_params(c, 1).scalar_count(), count_parameters(c));
}

TEST(Counters, DegenerateConfigMatchesHandTally) {
  ModelConfig c;
  c.leads = 1;
  c.segment_length = 1;
  c.segments = 2;
  c.region_length = 2;
  c.region_offsets = {0};
  c.embed_dim = c.decoder_dim = 1;
  c.depth = 1;
  c.encoder_heads = c.decoder_heads = 1;
  // P=1, D=D′=1: E 2, aux 1, e_pos 5, block 25, E′ 2, e_m 1, e′_pos 4, block 25, E₀ 2.
  EXPECT_EQ(count_parameters(c), 67u);
  EXPECT_EQ(count_parameters(c), hand_count(c));
}

TEST(Counters, DepthAddsOneBlock) {
  ModelConfig c;
  ModelConfig deeper = c;
  deeper.depth = 6;
  const std::uint64_t d = c.embed_dim;
  EXPECT_EQ(count_parameters(deeper) - count_parameters(c), 3 * (12 * d * d + 13 * d));
}

TEST(Counters, PaperFlops) {
  ModelConfig c;
  auto f = estimate_flops(c);
  EXPECT_EQ(f.encoder_tokens, 34u);
  EXPECT_EQ(f.decoder_tokens, 44u);
  // Multiply-accumulate tally: patch 33·1500·64, three encoder blocks,
  // E′ on 33 tokens, one decoder block, E₀ on the 11 masked slots.
  const std::uint64_t expected = 33ull * 1500 * 64 + 3 * block_macs(34, 64, 4) + 33ull * 64 * 64 +
                                 block_macs(44, 64, 4) + 11ull * 64 * 1500;
  EXPECT_EQ(f.per_pass(), expected);
  EXPECT_EQ(f.per_pass(), 12227072u);
  const double g = double(f.per_pass()) / 1e9;
  EXPECT_GE(g, 0.012);
  EXPECT_LE(g, 0.020);
  EXPECT_EQ(f.inference_total(9, 4), f.per_pass() * 36);
}

TEST(Counters, HalvingWidthQuartersBlockCost) {
  ModelConfig c;
  ModelConfig half = c;
  half.embed_dim = 32;
  half.encoder_heads = 8;
  const double ratio = double(estimate_flops(c).encoder) / double(estimate_flops(half).encoder);
  EXPECT_GE(ratio, 3.5);
  EXPECT_LE(ratio, 4.5);
}

TEST(Counters, PureFunctionsOfConfig) {
  ModelConfig c;
  EXPECT_EQ(estimate_flops(c).per_pass(), estimate_flops(c).per_pass());
  EXPECT_EQ(count_parameters(c), count_parameters(c));
}

TEST(Checkpoint, RoundTripPreservesEverything) {
  Checkpoint ck;
  ck.config = small_config();
  ck.config.final_encoder_norm = true;
  ck.params = init_params(ck.config, 20);
  ck.extra["note"] = "x";
  auto back = deserialize_checkpoint(serialize_checkpoint(ck));
  EXPECT_EQ(back.config, ck.config);
  EXPECT_EQ(back.extra, ck.extra);
  auto a = ck.params.named();
  auto b = back.params.named();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_EQ(*a[i].second, *b[i].second);
  }
  EXPECT_EQ(checkpoint_hash(ck), checkpoint_hash(back));
  EXPECT_EQ(serialize_checkpoint(ck), serialize_checkpoint(back));
}

TEST(Checkpoint, DamageIsDetected) {
  Checkpoint ck;
  ck.config = small_config();
  ck.params = init_params(ck.config, 21);
  const std::string bytes = serialize_checkpoint(ck);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { deserialize_checkpoint(bad); }), ErrorCode::Format);
  EXPECT_EQ(code_of([&] { deserialize_checkpoint(bytes.substr(0, bytes.size() - 8)); }), ErrorCode::Corruption);
  Checkpoint mismatched = ck;
  mismatched.config.embed_dim = 16;
  mismatched.config.decoder_dim = 16;
  EXPECT_EQ(code_of([&] { deserialize_checkpoint(serialize_checkpoint(mismatched)); }), ErrorCode::Corruption);
}

TEST(Init, FollowsConventions) {
  ModelConfig c = small_config();
  auto p = init_params(c, 22);
  for (float v : p.patch_b.data()) EXPECT_EQ(v, 0.0f);
  for (float v : p.encoder[0].ln1_gamma.data()) EXPECT_EQ(v, 1.0f);
  for (float v : p.patch_w.data()) EXPECT_LE(std::abs(v), 2 * c.init_std + 1e-7);
  EXPECT_EQ(init_params(c, 22).patch_w, p.patch_w);
  EXPECT_FALSE(init_params(c, 23).patch_w == p.patch_w);
}

}  // namespace
