#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "retigrade/ensemble.hpp"
#include "retigrade/grader.hpp"

namespace retigrade {

enum class DmeGrade { kGrade0, kGrade1, kGrade2 };
inline constexpr std::size_t kDmeGradeCount = 3;

std::string_view to_string(DmeGrade grade) noexcept;
/// Grade0, Grade1, Grade2.
const ClassSet& dme_grade_classes();

struct DecisionRule {
  int case_number = 0;  ///< 1..4
  DmeGrade grade = DmeGrade::kGrade0;
};

/// Combines the two one-vs-rest verdicts:
///   no-exudates  grade-2   case  grade
///   true         false     1     0
///   false        true      2     2
///   false        false     3     1
///   true         true      4     2
DecisionRule decision_table(bool m1_no_exudates, bool m2_grade2) noexcept;

struct DmeDecision {
  DmeGrade grade = DmeGrade::kGrade0;
  bool m1_no_exudates = false;
  bool m2_grade2 = false;
  int case_number = 0;
  std::vector<VoteRecord> m1_votes;
  std::vector<VoteRecord> m2_votes;
};

class DmePipeline : public Grader {
 public:
  /// m1 must be a pruned dme-m1 ensemble and m2 a pruned dme-m2 ensemble.
  DmePipeline(EnsembleSpec m1, EnsembleSpec m2, CropMode mode = CropMode::kTenCrop);

  /// Both ensembles always run.
  DmeDecision grade(const PreparedCrops& crops) const;
  DmeDecision grade(const RawImage& img, std::string key) const;

  const ClassSet& output_classes() const noexcept override { return dme_grade_classes(); }
  CropMode crop_mode() const noexcept override { return mode_; }
  ClassIndex grade_index(const PreparedCrops& crops) const override {
    return static_cast<ClassIndex>(grade(crops).grade);
  }

 private:
  EnsembleSpec m1_;
  EnsembleSpec m2_;
  CropMode mode_;
  ClassIndex no_exudates_ = 0;
  ClassIndex grade2_ = 0;
};

DmeDecision grade_dme(const RawImage& img, const EnsembleSpec& m1, const EnsembleSpec& m2);

struct DmeBatchSummary {
  std::size_t graded = 0;
  std::array<std::size_t, kDmeGradeCount> grade_counts{};
  std::array<std::size_t, 4> case_counts{};
  std::vector<std::pair<std::string, std::string>> failures;

  /// Images where the two models contradict each other.
  std::size_t contradictions() const noexcept { return case_counts[3]; }
};

inline constexpr std::string_view kDmeReportHeader = "filename,grade,case,m1_flag,m2_flag";

DmeBatchSummary grade_dme_batch(const std::filesystem::path& dir, const DmePipeline& pipeline,
                                const std::filesystem::path& out_csv, std::size_t workers = 1);

}  // namespace retigrade
