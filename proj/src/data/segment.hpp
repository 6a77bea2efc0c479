#pragma once

#include <span>
#include <vector>

#include "data/record.hpp"

namespace mmae::data {

// T non-overlapping time slices of a record. Row t of `patches` is segment
// t+1 vectorised lead-major: element k·L + q holds lead k, sample q of the
// slice, where L = Q/T.
struct SegmentGrid {
  std::size_t leads = 0;
  std::size_t segment_length = 0;
  tensor::Tensor<float> patches;  // T × (K·L)

  std::size_t count() const noexcept { return patches.rows(); }
  std::size_t patch_size() const noexcept { return leads * segment_length; }
  // 1-based segment index, matching the notation used for masks and regions.
  std::span<const float> segment(std::size_t t) const;
};

SegmentGrid segment_record(const EcgRecord& record, std::size_t segments);

// Inverse of segment_record: the K×Q signal.
tensor::Tensor<float> reassemble(const SegmentGrid& grid);

enum class NormalizationScope { Segment, PerLead };
enum class VarianceKind { Population, Sample };

struct NormalizationOptions {
  NormalizationScope scope = NormalizationScope::Segment;
  VarianceKind variance = VarianceKind::Population;
  double eps = 1e-6;

  bool operator==(const NormalizationOptions&) const = default;
};

// (x − mean) / sqrt(var + eps), statistics over the whole vector or per lead
// block of length x.size()/leads.
template <typename T>
std::vector<T> normalize_segment(std::span<const T> x, std::size_t leads, const NormalizationOptions& options);

}  // namespace mmae::data
