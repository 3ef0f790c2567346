#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "retigrade/ensemble.hpp"
#include "retigrade/grader.hpp"

namespace retigrade {

enum class DrGrade { kNormal, kMild, kModerate, kSevere, kPdr };
inline constexpr std::size_t kDrGradeCount = 5;

std::string_view to_string(DrGrade grade) noexcept;
/// Normal, Mild, Moderate, Severe, PDR.
const ClassSet& dr_grade_classes();

/// Class order of the primary ensemble; the last one is the Severe/PDR union.
enum class PrimaryClass { kNormal, kMild, kModerate, kSevereOrPdr };

struct DrDecision {
  DrGrade grade = DrGrade::kNormal;
  PrimaryClass primary = PrimaryClass::kNormal;
  std::vector<VoteRecord> primary_votes;
  std::optional<std::vector<VoteRecord>> expert_votes;
  bool routed_to_expert = false;
};

/// Primary ensemble over four classes; images it calls Severe-or-PDR are
/// re-graded by the expert ensemble on the same crops.
class DrPipeline : public Grader {
 public:
  /// Both specs must be pruned, with K = 4 and K = 2 respectively.
  DrPipeline(EnsembleSpec primary, EnsembleSpec expert, CropMode mode = CropMode::kTenCrop);

  DrDecision grade(const PreparedCrops& crops) const;
  DrDecision grade(const RawImage& img, std::string key) const;

  const ClassSet& output_classes() const noexcept override { return dr_grade_classes(); }
  CropMode crop_mode() const noexcept override { return mode_; }
  ClassIndex grade_index(const PreparedCrops& crops) const override {
    return static_cast<ClassIndex>(grade(crops).grade);
  }

 private:
  EnsembleSpec primary_;
  EnsembleSpec expert_;
  CropMode mode_;
};

DrDecision grade_dr(const RawImage& img, const EnsembleSpec& primary, const EnsembleSpec& expert);

struct DrBatchSummary {
  std::size_t graded = 0;
  std::array<std::size_t, kDrGradeCount> grade_counts{};
  std::size_t routed_to_expert = 0;
  std::vector<std::pair<std::string, std::string>> failures;  ///< file, reason
};

/// CSV header of the DR report.
inline constexpr std::string_view kDrReportHeader =
    "filename,grade,routed_to_expert,primary_label,primary_votes,expert_votes";

/// Grades every image in `dir` and writes one CSV row per file, ordered by
/// file name. Undecodable files get a row with grade "error" and are listed in
/// the summary; they do not stop the batch.
DrBatchSummary grade_dr_batch(const std::filesystem::path& dir, const DrPipeline& pipeline,
                              const std::filesystem::path& out_csv, std::size_t workers = 1);

}  // namespace retigrade
