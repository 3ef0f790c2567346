#include "retigrade/dme_pipeline.hpp"

#include <fstream>
#include <sstream>

#include "retigrade/batch.hpp"
#include "retigrade/error.hpp"
#include "retigrade/image_io.hpp"

namespace retigrade {

namespace fs = std::filesystem;

std::string_view to_string(DmeGrade grade) noexcept {
  switch (grade) {
    case DmeGrade::kGrade0: return "Grade0";
    case DmeGrade::kGrade1: return "Grade1";
    case DmeGrade::kGrade2: return "Grade2";
  }
  return "?";
}

const ClassSet& dme_grade_classes() {
  static const ClassSet classes({"Grade0", "Grade1", "Grade2"});
  return classes;
}

DecisionRule decision_table(bool m1_no_exudates, bool m2_grade2) noexcept {
  if (m1_no_exudates && !m2_grade2) return {1, DmeGrade::kGrade0};
  if (!m1_no_exudates && m2_grade2) return {2, DmeGrade::kGrade2};
  if (!m1_no_exudates && !m2_grade2) return {3, DmeGrade::kGrade1};
  return {4, DmeGrade::kGrade2};
}

DmePipeline::DmePipeline(EnsembleSpec m1, EnsembleSpec m2, CropMode mode)
    : m1_(std::move(m1)), m2_(std::move(m2)), mode_(mode) {
  require_pruned(m1_, Task::kDmeM1);
  require_pruned(m2_, Task::kDmeM2);
  // Polarity comes from the class names, never from positional assumptions.
  no_exudates_ = *canonical_classes(Task::kDmeM1).find("NoExudates");
  grade2_ = *canonical_classes(Task::kDmeM2).find("Grade2");
}

DmeDecision DmePipeline::grade(const PreparedCrops& crops) const {
  auto m1 = ensemble_vote(m1_, crops);
  auto m2 = ensemble_vote(m2_, crops);
  DmeDecision d;
  d.m1_no_exudates = m1.label == no_exudates_;
  d.m2_grade2 = m2.label == grade2_;
  const auto rule = decision_table(d.m1_no_exudates, d.m2_grade2);
  d.case_number = rule.case_number;
  d.grade = rule.grade;
  d.m1_votes = std::move(m1.votes);
  d.m2_votes = std::move(m2.votes);
  return d;
}

DmeDecision DmePipeline::grade(const RawImage& img, std::string key) const {
  return grade(prepare_crops(img, std::move(key), mode_));
}

DmeDecision grade_dme(const RawImage& img, const EnsembleSpec& m1, const EnsembleSpec& m2) {
  return DmePipeline(m1, m2).grade(img, "");
}

DmeBatchSummary grade_dme_batch(const fs::path& dir, const DmePipeline& pipeline,
                                const fs::path& out_csv, std::size_t workers) {
  const auto files = list_images(dir);
  struct Row {
    std::optional<DmeDecision> decision;
    std::string error;
  };
  std::vector<Row> rows(files.size());
  parallel_for(files.size(), workers, [&](std::size_t i) {
    RawImage img;
    try {
      img = read_image(files[i]);
    } catch (const InvalidInput& e) {
      rows[i].error = e.what();
      return;
    }
    rows[i].decision = pipeline.grade(img, files[i].filename().string());
  });

  std::ostringstream os;
  os << kDmeReportHeader << '\n';
  DmeBatchSummary summary;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string name = files[i].filename().string();
    if (!rows[i].decision) {
      summary.failures.emplace_back(name, rows[i].error);
      os << csv_field(name) << ",error,,,\n";
      continue;
    }
    const DmeDecision& d = *rows[i].decision;
    ++summary.graded;
    ++summary.grade_counts[static_cast<std::size_t>(d.grade)];
    ++summary.case_counts[static_cast<std::size_t>(d.case_number - 1)];
    os << csv_field(name) << ',' << to_string(d.grade) << ',' << d.case_number << ','
       << (d.m1_no_exudates ? "true" : "false") << ',' << (d.m2_grade2 ? "true" : "false") << '\n';
  }

  std::ofstream out(out_csv, std::ios::binary);
  if (!out) throw Error("cannot write report: " + out_csv.string());
  out << os.str();
  return summary;
}

}  // namespace retigrade
