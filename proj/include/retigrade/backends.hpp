#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "retigrade/classifier.hpp"

namespace retigrade {

/// Returns the same scores for every input.
class StubClassifier : public Classifier {
 public:
  explicit StubClassifier(std::vector<float> scores) : scores_(std::move(scores)) {}
  /// One-hot scores for `label` out of `num_classes`.
  static std::shared_ptr<StubClassifier> always(ClassIndex label, std::size_t num_classes);

  std::vector<float> scores(const TensorImage&, const InputKey&) const override { return scores_; }

 private:
  std::vector<float> scores_;
};

/// Lookup table keyed by source file name or by tensor checksum. An entry
/// holds either one score vector for every crop or one per crop.
class TableClassifier : public Classifier {
 public:
  struct Entry {
    std::vector<std::vector<float>> per_crop;  ///< size 1 means "all crops"
  };

  TableClassifier(std::map<std::string, Entry, std::less<>> entries,
                  std::optional<std::vector<float>> fallback)
      : entries_(std::move(entries)), fallback_(std::move(fallback)) {}

  std::vector<float> scores(const TensorImage& img, const InputKey& key) const override;

  const std::map<std::string, Entry, std::less<>>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, Entry, std::less<>> entries_;
  std::optional<std::vector<float>> fallback_;
};

/// ONNX graph with one 1x3xHxW float input and one 1xK output, run through
/// OpenCV's DNN module. Not thread-safe.
class OnnxClassifier : public Classifier {
 public:
  explicit OnnxClassifier(const std::filesystem::path& path);
  ~OnnxClassifier() override;

  std::vector<float> scores(const TensorImage& img, const InputKey& key) const override;
  bool thread_safe() const noexcept override { return false; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace retigrade
