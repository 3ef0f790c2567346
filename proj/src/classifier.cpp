#include "retigrade/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <set>

#include "retigrade/error.hpp"

namespace retigrade {

ClassSet::ClassSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) throw ConfigError("class set needs at least two classes");
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw ConfigError("class set has duplicate names");
}

std::optional<ClassIndex> ClassSet::find(std::string_view label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<ClassIndex>(it - labels_.begin());
}

std::string_view to_string(Task task) noexcept {
  switch (task) {
    case Task::kDrPrimary: return "dr-primary";
    case Task::kDrExpert: return "dr-expert";
    case Task::kDmeM1: return "dme-m1";
    case Task::kDmeM2: return "dme-m2";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  for (Task t : {Task::kDrPrimary, Task::kDrExpert, Task::kDmeM1, Task::kDmeM2}) {
    if (to_string(t) == name) return t;
  }
  throw ConfigError("unknown task '" + std::string(name) +
                    "' (expected dr-primary, dr-expert, dme-m1 or dme-m2)");
}

const ClassSet& canonical_classes(Task task) {
  static const ClassSet dr_primary({"Normal", "Mild", "Moderate", "S-(N)-PDR"});
  static const ClassSet dr_expert({"Severe", "PDR"});
  static const ClassSet dme_m1({"NoExudates", "Exudates"});
  static const ClassSet dme_m2({"NotGrade2", "Grade2"});
  switch (task) {
    case Task::kDrPrimary: return dr_primary;
    case Task::kDrExpert: return dr_expert;
    case Task::kDmeM1: return dme_m1;
    case Task::kDmeM2: return dme_m2;
  }
  return dr_primary;
}

Prediction Prediction::from_scores(std::vector<float> scores) {
  Prediction p;
  p.label = static_cast<ClassIndex>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  p.scores = std::move(scores);
  return p;
}

std::string_view to_string(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::kStub: return "stub";
    case BackendKind::kTable: return "table";
    case BackendKind::kOnnxFile: return "onnx-file";
    case BackendKind::kCustom: return "custom";
  }
  return "?";
}

ModelHandle make_handle(std::string id, Task task, std::shared_ptr<const Classifier> backend,
                        ChannelStats stats) {
  if (!backend) throw ConfigError("model '" + id + "': null backend");
  stats.validate();
  ModelHandle h;
  h.id = std::move(id);
  h.kind = BackendKind::kCustom;
  h.task = task;
  h.class_set = canonical_classes(task);
  h.stats = stats;
  h.source = "inline";
  if (!backend->thread_safe()) h.call_mutex = std::make_shared<std::mutex>();
  h.backend = std::move(backend);
  return h;
}

Prediction predict(const ModelHandle& model, const TensorImage& img, const InputKey& key) {
  if (!model.backend) throw BackendError(model.id, "no backend loaded", key.crop_index);
  if (img.stage() != TensorStage::kStandardized) {
    throw BackendError(model.id, "input tensor is not standardized", key.crop_index);
  }
  std::vector<float> scores;
  try {
    if (model.call_mutex) {
      std::lock_guard lock(*model.call_mutex);
      scores = model.backend->scores(img, key);
    } else {
      scores = model.backend->scores(img, key);
    }
  } catch (const BackendError&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError(model.id, e.what(), key.crop_index);
  }
  if (scores.size() != model.class_set.size()) {
    throw BackendError(model.id,
                       "expected " + std::to_string(model.class_set.size()) + " scores, got " +
                           std::to_string(scores.size()),
                       key.crop_index);
  }
  if (!std::all_of(scores.begin(), scores.end(), [](float s) { return std::isfinite(s); })) {
    throw BackendError(model.id, "non-finite score", key.crop_index);
  }
  return Prediction::from_scores(std::move(scores));
}

std::string tensor_checksum(const TensorImage& img) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  const auto values = img.values();
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  for (std::size_t i = 0; i < values.size_bytes(); ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[hash & 0xF];
    hash >>= 4;
  }
  return out;
}

}  // namespace retigrade
