#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "data/record.hpp"
#include "train/scoring.hpp"

namespace mmae::app {

struct SvgOptions {
  std::vector<std::size_t> leads;  // 0-based; empty = all leads
  std::size_t window_begin = 0;
  std::size_t window_end = 0;  // exclusive; 0 = end of record
  double width = 1000;
  double lead_height = 110;
  double strip_height = 14;
};

// Decile level per point: floor(10 · fraction of the record's point scores
// strictly below it), clamped to 0..9. Row-major K × Q.
std::vector<std::uint8_t> score_deciles(const tensor::Tensor<double>& point_scores);

// Per lead: the signal polyline, a score strip coloured by decile and red
// boxes over ground-truth anomaly runs when the record carries a mask.
// Strip rectangles carry data-level, data-begin and data-end attributes.
std::string render_localization_svg(const data::EcgRecord& record, const train::AnomalyReport& report,
                                    const SvgOptions& options);

// "II,V1" or "0,6" into 0-based lead indices.
std::vector<std::size_t> parse_lead_list(const std::string& text, std::size_t leads);

}  // namespace mmae::app
