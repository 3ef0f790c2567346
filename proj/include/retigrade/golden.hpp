#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "retigrade/evaluation.hpp"

namespace retigrade {

/// A reference confusion matrix together with the accuracy stated for it.
struct ReferenceMatrix {
  std::string name;
  ConfusionMatrix matrix;
  double quoted_percent = 0.0;
};

std::span<const ReferenceMatrix> reference_matrices();

struct GoldenCheck {
  std::string name;
  std::size_t trace = 0;
  std::size_t total = 0;
  double computed_percent = 0.0;
  double quoted_percent = 0.0;
  bool pass = false;
};

struct GoldenReport {
  std::vector<GoldenCheck> checks;
  /// Disagreements between stated accuracies. Informational only.
  std::vector<std::string> inconsistencies;

  bool all_pass() const noexcept;
};

/// Recomputes trace / sum for every reference matrix and compares it to the
/// quoted accuracy within `tolerance_pp` percentage points.
GoldenReport golden_check(double tolerance_pp = 0.1);

std::string format_golden(const GoldenReport& report);

}  // namespace retigrade
