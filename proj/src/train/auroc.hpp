#pragma once

#include <cstdint>
#include <span>

namespace mmae::train {

// Mann–Whitney AUROC: probability that a random positive scores above a
// random negative, ties counted as one half. Labels are 0/1. Throws a metric
// error when either class is absent.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

}  // namespace mmae::train
