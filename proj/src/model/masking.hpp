#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "model/config.hpp"

namespace mmae::model {

using Rng = std::mt19937_64;

struct RegionSpec {
  std::vector<std::size_t> offsets;  // w₁ < … < w_ν, each w + δ ≤ T
  std::size_t delta = 4;

  void validate(std::size_t segments) const;
  static RegionSpec from(const ModelConfig& cfg) { return {cfg.region_offsets, cfg.region_length}; }
};

// Region for offset w is the 1-based segment indices {w+1, …, w+δ}.
std::vector<std::vector<std::size_t>> build_local_regions(std::size_t segments, const RegionSpec& spec);

// clamp([n·θ], 1, n − 1) where [·] is round-half-up or floor.
std::size_t masked_count(std::size_t n, double theta, Rounding rounding = Rounding::HalfUp);

// Masked/unmasked split of the global segments {1..T} and of one local region
// {w+1..w+δ}. All index lists are sorted, 1-based segment indices.
struct MaskPlan {
  std::size_t region_offset = 0;
  std::vector<std::size_t> global_masked;
  std::vector<std::size_t> global_unmasked;
  std::vector<std::size_t> local_masked;
  std::vector<std::size_t> local_unmasked;

  // Checks the disjoint-cover property of both splits.
  void validate(std::size_t segments, std::size_t delta) const;
  bool operator==(const MaskPlan&) const = default;
};

MaskPlan sample_mask_plan(std::size_t segments, std::size_t delta, double theta, std::size_t region_offset, Rng& rng,
                          Rounding rounding = Rounding::HalfUp);

// Ablation: one draw of clamp([(T+δ)·θ], 1, T+δ−1) tokens over the
// concatenated global and local streams. Either stream may end up unmasked.
MaskPlan sample_single_pool_plan(std::size_t segments, std::size_t delta, double theta, std::size_t region_offset,
                                 Rng& rng, Rounding rounding = Rounding::HalfUp);

// Global mask drawn as in sample_mask_plan; local mask given as in-region
// positions (1..δ).
MaskPlan plan_with_local_positions(std::size_t segments, std::size_t delta, double theta, std::size_t region_offset,
                                   const std::vector<std::size_t>& local_positions, Rng& rng,
                                   Rounding rounding = Rounding::HalfUp);

// Hands out in-region positions from successive random permutations of
// {1..δ}, so that ⌈δ / R⌉ consecutive requests of R positions cover the
// whole region.
class LocalSlotSchedule {
 public:
  LocalSlotSchedule(std::size_t delta, Rng& rng) : delta_(delta), rng_(rng) {}
  std::vector<std::size_t> next(std::size_t count);

 private:
  std::size_t delta_;
  Rng& rng_;
  std::vector<std::size_t> pool_;
};

// Masked plan for a configuration, honouring the single-pool ablation.
MaskPlan sample_plan_for(const ModelConfig& cfg, std::size_t region_offset, Rng& rng);

}  // namespace mmae::model
