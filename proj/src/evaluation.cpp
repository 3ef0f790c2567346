#include "retigrade/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "retigrade/batch.hpp"
#include "retigrade/error.hpp"
#include "retigrade/image_io.hpp"

namespace retigrade {

namespace fs = std::filesystem;

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view name) noexcept {
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

LabeledDataset load_labels(const fs::path& csv, const ClassSet& class_set) {
  std::ifstream in(csv);
  if (!in) throw InvalidInput("label file not found: " + csv.string());

  const std::string where = csv.string() + ":";
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(where + "1: missing header");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "filename" || header[1] != "label" ||
      (header.size() == 3 && header[2] != "split") || header.size() > 3) {
    throw InvalidInput(where + "1: header must be filename,label[,split]");
  }
  const bool has_split = header.size() == 3;

  LabeledDataset ds;
  ds.class_set = class_set;
  std::set<std::string> seen;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    const std::string at = where + std::to_string(line_no) + ": ";
    if (fields.size() != header.size()) {
      throw InvalidInput(at + "expected " + std::to_string(header.size()) + " fields");
    }
    LabeledItem item;
    item.filename = fields[0];
    if (item.filename.empty()) throw InvalidInput(at + "empty filename");
    const auto label = class_set.find(fields[1]);
    if (!label) throw InvalidInput(at + "unknown label '" + fields[1] + "'");
    item.truth = *label;
    if (has_split && !fields[2].empty()) {
      item.split = parse_split(fields[2]);
      if (!item.split) throw InvalidInput(at + "unknown split '" + fields[2] + "'");
    }
    if (!seen.insert(item.filename).second) {
      throw InvalidInput(at + "duplicate filename '" + item.filename + "'");
    }
    ds.items.push_back(std::move(item));
  }
  return ds;
}

SplitSizes split_sizes(std::size_t n) noexcept {
  SplitSizes s;
  s.train = n * 7 / 10;
  s.val = n * 2 / 10;
  s.test = n - s.train - s.val;
  return s;
}

void assign_splits(LabeledDataset& dataset, std::uint64_t seed) {
  const std::size_t n = dataset.items.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates on raw mt19937_64 output: identical across standard libraries.
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  const SplitSizes sizes = split_sizes(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto& item = dataset.items[order[r]];
    item.split = r < sizes.train ? Split::kTrain : r < sizes.train + sizes.val ? Split::kVal : Split::kTest;
  }
}

LabeledDataset select_split(const LabeledDataset& dataset, Split split) {
  LabeledDataset out;
  out.class_set = dataset.class_set;
  for (const auto& item : dataset.items) {
    if (item.split == split) out.items.push_back(item);
  }
  return out;
}

ConfusionMatrix::ConfusionMatrix(ClassSet classes)
    : classes_(std::move(classes)), counts_(classes_.size() * classes_.size(), 0) {}

ConfusionMatrix::ConfusionMatrix(ClassSet classes, std::vector<std::vector<std::size_t>> rows)
    : ConfusionMatrix(std::move(classes)) {
  if (rows.size() != size()) throw InvalidInput("confusion matrix: wrong number of rows");
  for (std::size_t t = 0; t < size(); ++t) {
    if (rows[t].size() != size()) throw InvalidInput("confusion matrix: wrong number of columns");
    std::copy(rows[t].begin(), rows[t].end(), counts_.begin() + static_cast<std::ptrdiff_t>(t * size()));
  }
}

void ConfusionMatrix::add(ClassIndex truth, ClassIndex predicted) {
  if (truth >= size() || predicted >= size()) throw InvalidInput("confusion matrix: label out of range");
  ++counts_[truth * size() + predicted];
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (!(classes_ == other.classes_)) throw InvalidInput("confusion matrix: class sets differ");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::size_t ConfusionMatrix::at(ClassIndex truth, ClassIndex predicted) const {
  if (truth >= size() || predicted >= size()) throw InvalidInput("confusion matrix: label out of range");
  return counts_[truth * size() + predicted];
}

std::size_t ConfusionMatrix::trace() const noexcept {
  std::size_t t = 0;
  for (std::size_t i = 0; i < size(); ++i) t += counts_[i * size() + i];
  return t;
}

std::size_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::row_sum(ClassIndex truth) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < size(); ++p) s += at(truth, p);
  return s;
}

std::size_t ConfusionMatrix::col_sum(ClassIndex predicted) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < size(); ++t) s += at(t, predicted);
  return s;
}

double ConfusionMatrix::accuracy() const noexcept {
  const std::size_t n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

ConfusionMatrix confusion(std::span<const ClassIndex> predictions, std::span<const ClassIndex> truths,
                          const ClassSet& classes) {
  if (predictions.size() != truths.size()) {
    throw InvalidInput("confusion: " + std::to_string(predictions.size()) + " predictions for " +
                       std::to_string(truths.size()) + " truths");
  }
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < truths.size(); ++i) m.add(truths[i], predictions[i]);
  return m;
}

EvaluationResult evaluate(const Grader& grader, const LabeledDataset& dataset, const fs::path& images_dir,
                          std::size_t workers) {
  if (!(dataset.class_set == grader.output_classes())) {
    throw ConfigError("label classes do not match the pipeline's output grades");
  }
  std::vector<const LabeledItem*> items;
  for (const auto& item : dataset.items) items.push_back(&item);
  std::sort(items.begin(), items.end(),
            [](const LabeledItem* a, const LabeledItem* b) { return a->filename < b->filename; });

  std::vector<std::optional<ClassIndex>> predicted(items.size());
  std::vector<std::string> errors(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    try {
      const RawImage img = read_image(images_dir / items[i]->filename);
      predicted[i] = grader.grade_index(prepare_crops(img, items[i]->filename, grader.crop_mode()));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  EvaluationResult r;
  r.matrix = ConfusionMatrix(dataset.class_set);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!predicted[i]) {
      r.skipped.emplace_back(items[i]->filename, errors[i]);
      continue;
    }
    r.matrix.add(items[i]->truth, *predicted[i]);
    r.log.push_back({items[i]->filename, items[i]->truth, *predicted[i]});
  }
  return r;
}

std::string format_accuracy(double accuracy) {
  std::ostringstream os;
  os << "Accuracy = " << std::fixed << std::setprecision(2) << accuracy * 100.0 << '%';
  return os.str();
}

std::string matrix_to_csv(const ConfusionMatrix& matrix) {
  std::ostringstream os;
  os << "truth\\pred";
  for (const auto& l : matrix.classes().labels()) os << ',' << csv_field(l);
  os << '\n';
  for (std::size_t t = 0; t < matrix.size(); ++t) {
    os << csv_field(matrix.classes().name(t));
    for (std::size_t p = 0; p < matrix.size(); ++p) os << ',' << matrix.at(t, p);
    os << '\n';
  }
  return os.str();
}

std::string matrix_to_table(const ConfusionMatrix& matrix) {
  std::size_t width = 5;
  for (const auto& l : matrix.classes().labels()) width = std::max(width, l.size());
  width += 2;
  const auto cell = [width](std::ostream& os, const std::string& s) { os << std::setw(static_cast<int>(width)) << s; };

  std::ostringstream os;
  os << std::string(width + 6, ' ') << "Prediction\n";
  os << std::setw(6) << std::left << "" << std::right;
  cell(os, "");
  for (const auto& l : matrix.classes().labels()) cell(os, l);
  os << '\n';
  for (std::size_t t = 0; t < matrix.size(); ++t) {
    os << std::setw(6) << std::left << (t == 0 ? "Truth" : "") << std::right;
    cell(os, matrix.classes().name(t));
    for (std::size_t p = 0; p < matrix.size(); ++p) cell(os, std::to_string(matrix.at(t, p)));
    os << '\n';
  }
  os << format_accuracy(matrix.accuracy()) << " (" << matrix.trace() << '/' << matrix.total() << ")\n";
  return os.str();
}

std::string log_to_csv(const EvaluationResult& result) {
  std::ostringstream os;
  os << "filename,truth,predicted\n";
  for (const auto& e : result.log) {
    os << csv_field(e.filename) << ',' << csv_field(result.matrix.classes().name(e.truth)) << ','
       << csv_field(result.matrix.classes().name(e.predicted)) << '\n';
  }
  return os.str();
}

}  // namespace retigrade
