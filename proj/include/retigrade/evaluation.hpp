#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "retigrade/classifier.hpp"
#include "retigrade/grader.hpp"

namespace retigrade {

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split) noexcept;
std::optional<Split> parse_split(std::string_view name) noexcept;

struct LabeledItem {
  std::string filename;
  ClassIndex truth = 0;
  std::optional<Split> split;
};

struct LabeledDataset {
  std::vector<LabeledItem> items;
  ClassSet class_set;
};

/// Reads "filename,label[,split]" with a header row. Unknown labels, unknown
/// split names and duplicate file names throw InvalidInput naming the line.
LabeledDataset load_labels(const std::filesystem::path& csv, const ClassSet& class_set);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// 70% / 20% of n rounded down; the remainder is the test split.
SplitSizes split_sizes(std::size_t n) noexcept;

/// Assigns a seeded 70/20/10 split to every item, overwriting any existing one.
void assign_splits(LabeledDataset& dataset, std::uint64_t seed);

LabeledDataset select_split(const LabeledDataset& dataset, Split split);

/// Truth-by-prediction counts.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(ClassSet classes);
  /// Throws InvalidInput unless `rows` is K x K.
  ConfusionMatrix(ClassSet classes, std::vector<std::vector<std::size_t>> rows);

  void add(ClassIndex truth, ClassIndex predicted);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  const ClassSet& classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return classes_.size(); }
  std::size_t at(ClassIndex truth, ClassIndex predicted) const;
  std::size_t trace() const noexcept;
  std::size_t total() const noexcept;
  std::size_t row_sum(ClassIndex truth) const;
  std::size_t col_sum(ClassIndex predicted) const;
  /// trace / total; 0 for an empty matrix.
  double accuracy() const noexcept;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  ClassSet classes_;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const ClassIndex> predictions,
                          std::span<const ClassIndex> truths, const ClassSet& classes);

struct PredictionLogEntry {
  std::string filename;
  ClassIndex truth = 0;
  ClassIndex predicted = 0;
};

struct EvaluationResult {
  ConfusionMatrix matrix;
  std::vector<PredictionLogEntry> log;  ///< sorted by file name
  std::vector<std::pair<std::string, std::string>> skipped;
};

/// Grades every item (images resolved against `images_dir`) and tallies the
/// confusion matrix. Items that fail to load or grade are skipped and listed.
/// The dataset's class set must equal the grader's output classes.
EvaluationResult evaluate(const Grader& grader, const LabeledDataset& dataset,
                          const std::filesystem::path& images_dir, std::size_t workers = 1);

/// "Accuracy = 85.71%"
std::string format_accuracy(double accuracy);

/// Header "truth\\pred,<class>..." then one row per truth class.
std::string matrix_to_csv(const ConfusionMatrix& matrix);
/// Fixed-width Truth x Prediction table.
std::string matrix_to_table(const ConfusionMatrix& matrix);
/// filename,truth,predicted
std::string log_to_csv(const EvaluationResult& result);

}  // namespace retigrade
