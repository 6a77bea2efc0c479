#include "train/auroc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "common/error.hpp"

namespace mmae::train {

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  require(scores.size() == labels.size(), ErrorCode::Shape, "auroc: scores and labels differ in length");
  for (double s : scores) require(std::isfinite(s), ErrorCode::Metric, "auroc: scores must be finite");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Walk tie groups in ascending score order. Counts stay integral (doubled
  // to absorb the half credit), so the result is exact up to one division.
  std::uint64_t negatives_below = 0, positives = 0, negatives = 0, doubled_u = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0, neg = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      require(labels[idx[j]] <= 1, ErrorCode::Metric, "auroc: labels must be 0 or 1");
      (labels[idx[j]] ? pos : neg) += 1;
      ++j;
    }
    doubled_u += pos * (2 * negatives_below + neg);
    negatives_below += neg;
    positives += pos;
    negatives += neg;
    i = j;
  }
  require(positives > 0 && negatives > 0, ErrorCode::Metric, "auroc is undefined unless both classes are present");
  return double(doubled_u) / (2.0 * double(positives) * double(negatives));
}

}  // namespace mmae::train
