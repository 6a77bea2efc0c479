#include "model/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mmae::model {

namespace {

// k distinct values of {0..n-1}, uniformly, via a partial Fisher–Yates shuffle.
std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

void split(std::size_t first, std::size_t n, const std::vector<bool>& masked, std::vector<std::size_t>& on,
           std::vector<std::size_t>& off) {
  on.clear();
  off.clear();
  for (std::size_t i = 0; i < n; ++i) (masked[i] ? on : off).push_back(first + i);
}

}  // namespace

void RegionSpec::validate(std::size_t segments) const {
  require(delta >= 1 && delta <= segments, ErrorCode::Config, "region length must lie in [1, T]");
  require(!offsets.empty(), ErrorCode::Config, "at least one region offset is required");
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    require(offsets[i] + delta <= segments, ErrorCode::Config,
            "region offset " + std::to_string(offsets[i]) + " exceeds T − δ = " + std::to_string(segments - delta));
    require(i == 0 || offsets[i] > offsets[i - 1], ErrorCode::Config, "region offsets must be strictly increasing");
  }
}

std::vector<std::vector<std::size_t>> build_local_regions(std::size_t segments, const RegionSpec& spec) {
  spec.validate(segments);
  std::vector<std::vector<std::size_t>> regions;
  for (std::size_t w : spec.offsets) {
    std::vector<std::size_t> r(spec.delta);
    std::iota(r.begin(), r.end(), w + 1);
    regions.push_back(std::move(r));
  }
  return regions;
}

std::size_t masked_count(std::size_t n, double theta, Rounding rounding) {
  require(n >= 2, ErrorCode::Config, "masking needs at least two tokens to keep one visible");
  require(theta >= 0 && theta <= 1, ErrorCode::Config, "mask ratio must lie in [0, 1]");
  const double raw = double(n) * theta;
  // Snap values within rounding noise of an integer or half-integer first.
  const double snapped = std::round(raw * 1e9) / 1e9;
  const double r = rounding == Rounding::Floor ? std::floor(snapped) : std::floor(snapped + 0.5);
  return std::clamp<std::size_t>(static_cast<std::size_t>(r), 1, n - 1);
}

void MaskPlan::validate(std::size_t segments, std::size_t delta) const {
  std::vector<int> seen(segments + 1, 0);
  for (auto i : global_masked) {
    require(i >= 1 && i <= segments, ErrorCode::Contract, "global mask index out of range");
    ++seen[i];
  }
  for (auto i : global_unmasked) {
    require(i >= 1 && i <= segments, ErrorCode::Contract, "global index out of range");
    ++seen[i];
  }
  for (std::size_t i = 1; i <= segments; ++i) {
    require(seen[i] == 1, ErrorCode::Contract, "global masked/unmasked sets must partition {1..T}");
  }
  std::vector<int> local(delta + 1, 0);
  for (const auto* set : {&local_masked, &local_unmasked}) {
    for (auto i : *set) {
      require(i > region_offset && i <= region_offset + delta, ErrorCode::Contract, "local index outside the region");
      ++local[i - region_offset];
    }
  }
  for (std::size_t r = 1; r <= delta; ++r) {
    require(local[r] == 1, ErrorCode::Contract, "local masked/unmasked sets must partition the region");
  }
}

MaskPlan sample_mask_plan(std::size_t segments, std::size_t delta, double theta, std::size_t region_offset, Rng& rng,
                          Rounding rounding) {
  require(segments >= 2 && delta >= 2, ErrorCode::Config, "masking requires T ≥ 2 and δ ≥ 2");
  require(region_offset + delta <= segments, ErrorCode::Config, "region offset exceeds T − δ");
  const std::size_t s_m = masked_count(segments, theta, rounding);
  const std::size_t r_m = masked_count(delta, theta, rounding);
  std::vector<bool> g(segments, false), l(delta, false);
  for (auto i : draw_without_replacement(segments, s_m, rng)) g[i] = true;
  for (auto i : draw_without_replacement(delta, r_m, rng)) l[i] = true;
  MaskPlan plan;
  plan.region_offset = region_offset;
  split(1, segments, g, plan.global_masked, plan.global_unmasked);
  split(region_offset + 1, delta, l, plan.local_masked, plan.local_unmasked);
  return plan;
}

MaskPlan sample_single_pool_plan(std::size_t segments, std::size_t delta, double theta, std::size_t region_offset,
                                 Rng& rng, Rounding rounding) {
  require(segments >= 1 && delta >= 1, ErrorCode::Config, "empty token streams");
  require(region_offset + delta <= segments, ErrorCode::Config, "region offset exceeds T − δ");
  const std::size_t total = segments + delta;
  const std::size_t m = masked_count(total, theta, rounding);
  std::vector<bool> pool(total, false);
  for (auto i : draw_without_replacement(total, m, rng)) pool[i] = true;
  std::vector<bool> g(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(segments));
  std::vector<bool> l(pool.begin() + static_cast<std::ptrdiff_t>(segments), pool.end());
  MaskPlan plan;
  plan.region_offset = region_offset;
  split(1, segments, g, plan.global_masked, plan.global_unmasked);
  split(region_offset + 1, delta, l, plan.local_masked, plan.local_unmasked);
  return plan;
}

MaskPlan plan_with_local_positions(std::size_t segments, std::size_t delta, double theta, std::size_t region_offset,
                                   const std::vector<std::size_t>& local_positions, Rng& rng, Rounding rounding) {
  require(segments >= 2 && delta >= 2, ErrorCode::Config, "masking requires T ≥ 2 and δ ≥ 2");
  const std::size_t s_m = masked_count(segments, theta, rounding);
  std::vector<bool> g(segments, false), l(delta, false);
  for (auto i : draw_without_replacement(segments, s_m, rng)) g[i] = true;
  for (auto r : local_positions) {
    require(r >= 1 && r <= delta, ErrorCode::Contract, "local position outside 1..δ");
    l[r - 1] = true;
  }
  MaskPlan plan;
  plan.region_offset = region_offset;
  split(1, segments, g, plan.global_masked, plan.global_unmasked);
  split(region_offset + 1, delta, l, plan.local_masked, plan.local_unmasked);
  return plan;
}

std::vector<std::size_t> LocalSlotSchedule::next(std::size_t count) {
  require(count <= delta_, ErrorCode::Contract, "cannot mask more slots than the region holds");
  std::vector<std::size_t> out;
  while (out.size() < count) {
    if (pool_.empty()) {
      for (std::size_t r = 1; r <= delta_; ++r) {
        if (std::find(out.begin(), out.end(), r) == out.end()) pool_.push_back(r);
      }
      std::shuffle(pool_.begin(), pool_.end(), rng_);
    }
    const std::size_t r = pool_.back();
    pool_.pop_back();
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  return out;
}

MaskPlan sample_plan_for(const ModelConfig& cfg, std::size_t region_offset, Rng& rng) {
  if (cfg.ablation.single_pool_mask) {
    return sample_single_pool_plan(cfg.segments, cfg.region_length, cfg.mask_ratio, region_offset, rng, cfg.rounding);
  }
  return sample_mask_plan(cfg.segments, cfg.region_length, cfg.mask_ratio, region_offset, rng, cfg.rounding);
}

}  // namespace mmae::model
