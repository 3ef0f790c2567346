#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "retigrade/image.hpp"

namespace retigrade {

using ClassIndex = std::size_t;

/// Ordered, unique class names. Order is part of the task contract.
class ClassSet {
 public:
  ClassSet() = default;
  /// Throws ConfigError if fewer than two labels or duplicates.
  explicit ClassSet(std::vector<std::string> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& name(ClassIndex i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<ClassIndex> find(std::string_view label) const;

  friend bool operator==(const ClassSet&, const ClassSet&) = default;

 private:
  std::vector<std::string> labels_;
};

/// The four classifier roles in the grading cascade.
enum class Task {
  kDrPrimary,  ///< Normal / Mild / Moderate / S-(N)-PDR
  kDrExpert,   ///< Severe / PDR
  kDmeM1,      ///< NoExudates / Exudates
  kDmeM2,      ///< NotGrade2 / Grade2
};

std::string_view to_string(Task task) noexcept;
/// Throws ConfigError on an unknown name.
Task parse_task(std::string_view name);
const ClassSet& canonical_classes(Task task);

/// Raw scores plus their argmax (first maximum wins).
struct Prediction {
  std::vector<float> scores;
  ClassIndex label = 0;

  static Prediction from_scores(std::vector<float> scores);
};

/// What a classifier is told about its input besides the pixels.
struct InputKey {
  std::string_view source;  ///< file name of the source image
  std::size_t crop_index = 0;
};

/// Anything mapping a standardized crop to a K-vector of scores.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::vector<float> scores(const TensorImage& img, const InputKey& key) const = 0;
  /// False when concurrent calls must be serialized by the caller.
  virtual bool thread_safe() const noexcept { return true; }
};

enum class BackendKind { kStub, kTable, kOnnxFile, kCustom };

std::string_view to_string(BackendKind kind) noexcept;

/// Immutable handle to one ensemble member.
struct ModelHandle {
  std::string id;
  BackendKind kind = BackendKind::kCustom;
  Task task = Task::kDrPrimary;
  ClassSet class_set;
  ChannelStats stats;
  std::string source;  ///< model file path or "inline"
  std::shared_ptr<const Classifier> backend;
  /// Present when calls must be serialized (non-thread-safe backend or
  /// a manifest request).
  std::shared_ptr<std::mutex> call_mutex;
};

/// Wraps an arbitrary classifier (tests, embedding applications).
ModelHandle make_handle(std::string id, Task task, std::shared_ptr<const Classifier> backend,
                        ChannelStats stats = {});

/// Runs the backend and validates the score vector. Any failure surfaces as
/// BackendError tagged with the model id.
Prediction predict(const ModelHandle& model, const TensorImage& img, const InputKey& key = {});

/// FNV-1a over the float bytes of a tensor, as 16 lowercase hex digits.
std::string tensor_checksum(const TensorImage& img);

}  // namespace retigrade
