#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "model/config.hpp"

namespace mmae::app {

struct GradcheckEntry {
  std::string name;
  double max_rel_err = 0;
  double tolerance = 0;
  std::size_t points = 0;
  std::size_t coordinates = 0;
  bool passed = false;
};

struct GradcheckSuiteResult {
  std::vector<GradcheckEntry> entries;
  double seconds = 0;
  bool passed() const;
};

nlohmann::json to_json(const GradcheckSuiteResult& r);

// Small configuration used by the end-to-end check (T=6, δ=2, D=8, L=1).
model::ModelConfig tiny_gradcheck_config();

// Finite-difference checks, in double precision, of every differentiable op
// at `points` random points (tolerance 1e-4) and of the full model loss on
// the tiny configuration (tolerance 1e-3).
GradcheckSuiteResult run_gradcheck_suite(std::uint64_t seed = 7, std::size_t points = 20);

}  // namespace mmae::app
