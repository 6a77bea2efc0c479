#include "data/segment.hpp"

#include <cmath>

namespace mmae::data {

std::span<const float> SegmentGrid::segment(std::size_t t) const {
  require(t >= 1 && t <= count(), ErrorCode::Contract, "segment index out of range");
  return {patches.row(t - 1), patch_size()};
}

SegmentGrid segment_record(const EcgRecord& record, std::size_t segments) {
  const std::size_t q = record.samples();
  require(segments >= 1 && q % segments == 0, ErrorCode::Config,
          "segment count " + std::to_string(segments) + " does not divide record length " + std::to_string(q));
  SegmentGrid grid;
  grid.leads = record.leads();
  grid.segment_length = q / segments;
  grid.patches = tensor::Tensor<float>({segments, grid.patch_size()});
  for (std::size_t t = 0; t < segments; ++t) {
    float* dst = grid.patches.row(t);
    for (std::size_t k = 0; k < grid.leads; ++k) {
      const float* src = record.signal.row(k) + t * grid.segment_length;
      std::copy(src, src + grid.segment_length, dst + k * grid.segment_length);
    }
  }
  return grid;
}

tensor::Tensor<float> reassemble(const SegmentGrid& grid) {
  const std::size_t l = grid.segment_length;
  tensor::Tensor<float> signal({grid.leads, grid.count() * l});
  for (std::size_t t = 0; t < grid.count(); ++t) {
    const float* src = grid.patches.row(t);
    for (std::size_t k = 0; k < grid.leads; ++k) {
      std::copy(src + k * l, src + (k + 1) * l, signal.row(k) + t * l);
    }
  }
  return signal;
}

template <typename T>
std::vector<T> normalize_segment(std::span<const T> x, std::size_t leads, const NormalizationOptions& options) {
  require(options.eps > 0, ErrorCode::Config, "normalization eps must be positive");
  const std::size_t blocks = options.scope == NormalizationScope::PerLead ? leads : 1;
  require(blocks >= 1 && x.size() % blocks == 0, ErrorCode::Shape, "segment length is not a multiple of the lead count");
  const std::size_t n = x.size() / blocks;
  std::vector<T> out(x.size());
  for (std::size_t b = 0; b < blocks; ++b) {
    const auto block = x.subspan(b * n, n);
    double mu = 0;
    for (T v : block) mu += v;
    mu /= double(n);
    double ss = 0;
    for (T v : block) ss += (double(v) - mu) * (double(v) - mu);
    const double denom = options.variance == VarianceKind::Sample && n > 1 ? double(n - 1) : double(n);
    const double inv = 1.0 / std::sqrt(ss / denom + options.eps);
    for (std::size_t i = 0; i < n; ++i) out[b * n + i] = static_cast<T>((double(block[i]) - mu) * inv);
  }
  return out;
}

template std::vector<float> normalize_segment<float>(std::span<const float>, std::size_t, const NormalizationOptions&);
template std::vector<double> normalize_segment<double>(std::span<const double>, std::size_t,
                                                       const NormalizationOptions&);

}  // namespace mmae::data
