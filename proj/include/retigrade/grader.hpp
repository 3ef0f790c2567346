#pragma once

#include "retigrade/classifier.hpp"
#include "retigrade/preprocess.hpp"

namespace retigrade {

/// A complete grading pipeline reduced to "crops in, final grade out".
class Grader {
 public:
  virtual ~Grader() = default;

  virtual const ClassSet& output_classes() const noexcept = 0;
  virtual CropMode crop_mode() const noexcept = 0;
  virtual ClassIndex grade_index(const PreparedCrops& crops) const = 0;
};

}  // namespace retigrade
