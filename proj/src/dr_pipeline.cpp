#include "retigrade/dr_pipeline.hpp"

#include <fstream>
#include <sstream>

#include "retigrade/batch.hpp"
#include "retigrade/error.hpp"
#include "retigrade/image_io.hpp"

namespace retigrade {

namespace fs = std::filesystem;

std::string_view to_string(DrGrade grade) noexcept {
  switch (grade) {
    case DrGrade::kNormal: return "Normal";
    case DrGrade::kMild: return "Mild";
    case DrGrade::kModerate: return "Moderate";
    case DrGrade::kSevere: return "Severe";
    case DrGrade::kPdr: return "PDR";
  }
  return "?";
}

const ClassSet& dr_grade_classes() {
  static const ClassSet classes({"Normal", "Mild", "Moderate", "Severe", "PDR"});
  return classes;
}

namespace {


std::string format_votes(const std::vector<VoteRecord>& votes, const ClassSet& classes) {
  std::string out;
  for (const auto& v : votes) {
    if (!out.empty()) out += ';';
    out += v.model_id + ':' + classes.name(v.model_label);
  }
  return out;
}

}  // namespace

DrPipeline::DrPipeline(EnsembleSpec primary, EnsembleSpec expert, CropMode mode)
    : primary_(std::move(primary)), expert_(std::move(expert)), mode_(mode) {
  require_pruned(primary_, Task::kDrPrimary);
  require_pruned(expert_, Task::kDrExpert);
}

DrDecision DrPipeline::grade(const PreparedCrops& crops) const {
  DrDecision d;
  auto primary = ensemble_vote(primary_, crops);
  d.primary = static_cast<PrimaryClass>(primary.label);
  d.primary_votes = std::move(primary.votes);
  switch (d.primary) {
    case PrimaryClass::kNormal: d.grade = DrGrade::kNormal; return d;
    case PrimaryClass::kMild: d.grade = DrGrade::kMild; return d;
    case PrimaryClass::kModerate: d.grade = DrGrade::kModerate; return d;
    case PrimaryClass::kSevereOrPdr: break;
  }
  auto expert = ensemble_vote(expert_, crops);
  d.routed_to_expert = true;
  d.grade = expert.label == 0 ? DrGrade::kSevere : DrGrade::kPdr;
  d.expert_votes = std::move(expert.votes);
  return d;
}

DrDecision DrPipeline::grade(const RawImage& img, std::string key) const {
  return grade(prepare_crops(img, std::move(key), mode_));
}

DrDecision grade_dr(const RawImage& img, const EnsembleSpec& primary, const EnsembleSpec& expert) {
  return DrPipeline(primary, expert).grade(img, "");
}

DrBatchSummary grade_dr_batch(const fs::path& dir, const DrPipeline& pipeline, const fs::path& out_csv,
                              std::size_t workers) {
  const auto files = list_images(dir);
  struct Row {
    std::optional<DrDecision> decision;
    std::string error;
  };
  std::vector<Row> rows(files.size());
  parallel_for(files.size(), workers, [&](std::size_t i) {
    const std::string name = files[i].filename().string();
    RawImage img;
    try {
      img = read_image(files[i]);
    } catch (const InvalidInput& e) {
      rows[i].error = e.what();
      return;
    }
    rows[i].decision = pipeline.grade(img, name);
  });

  std::ostringstream os;
  os << kDrReportHeader << '\n';
  DrBatchSummary summary;
  const auto& primary_classes = canonical_classes(Task::kDrPrimary);
  const auto& expert_classes = canonical_classes(Task::kDrExpert);
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string name = files[i].filename().string();
    if (!rows[i].decision) {
      summary.failures.emplace_back(name, rows[i].error);
      os << csv_field(name) << ",error,,,,\n";
      continue;
    }
    const DrDecision& d = *rows[i].decision;
    ++summary.graded;
    ++summary.grade_counts[static_cast<std::size_t>(d.grade)];
    if (d.routed_to_expert) ++summary.routed_to_expert;
    os << csv_field(name) << ',' << to_string(d.grade) << ',' << (d.routed_to_expert ? "true" : "false")
       << ',' << csv_field(primary_classes.name(static_cast<ClassIndex>(d.primary))) << ','
       << csv_field(format_votes(d.primary_votes, primary_classes)) << ','
       << csv_field(d.expert_votes ? format_votes(*d.expert_votes, expert_classes) : "") << '\n';
  }

  std::ofstream out(out_csv, std::ios::binary);
  if (!out) throw Error("cannot write report: " + out_csv.string());
  out << os.str();
  return summary;
}

}  // namespace retigrade
