#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "retigrade/classifier.hpp"
#include "retigrade/manifest.hpp"
#include "retigrade/preprocess.hpp"

namespace retigrade {

/// Modal label of `labels`; ties go to the lowest class index.
/// Throws InvalidInput on an empty list or a label >= num_classes.
ClassIndex vote(std::span<const ClassIndex> labels, std::size_t num_classes);

/// One model's verdict on one image.
struct VoteRecord {
  std::string model_id;
  std::vector<ClassIndex> per_crop_labels;
  std::vector<std::size_t> tally;
  ClassIndex model_label = 0;
};

struct EnsembleSpec {
  Task task = Task::kDrPrimary;
  std::vector<ModelHandle> members;
  bool pruned = false;
  std::vector<std::string> retained_ids;

  /// Members whose id is retained, in member order.
  std::vector<const ModelHandle*> retained() const;
  /// Throws ConfigError when retained ids are not a subset of member ids or a
  /// pruned spec retains nothing.
  void validate() const;
};

/// Throws ConfigError unless `spec` is a valid, pruned ensemble for `task`
/// with at least one retained member.
void require_pruned(const EnsembleSpec& spec, Task task);

/// Builds the ensemble for `task` from a manifest. Pruned iff the manifest
/// carries a retained stanza for that task.
EnsembleSpec ensemble_for(const Manifest& manifest, Task task);

/// Per-crop argmax followed by a vote over the crops, in crop order.
VoteRecord model_vote(const ModelHandle& model, const PreparedCrops& crops);

struct EnsembleOutcome {
  ClassIndex label = 0;
  std::vector<VoteRecord> votes;  ///< one per retained member
};

/// Second-level vote over the retained members' model labels. Requires a
/// pruned spec with a nonempty retained set (ConfigError otherwise).
EnsembleOutcome ensemble_vote(const EnsembleSpec& spec, const PreparedCrops& crops);

/// Pruning outcome. threshold = ceil(factor * benchmark_tp): a model is kept
/// when its true-positive count reaches that share of the benchmark's count.
struct PruneReport {
  Task task = Task::kDrPrimary;
  double factor = 0.95;
  std::string benchmark_id;
  std::size_t benchmark_tp = 0;
  std::size_t threshold = 0;
  std::vector<std::pair<std::string, std::size_t>> per_model_tp;  ///< member order
  std::vector<std::string> retained;
  std::size_t evaluated = 0;
  std::vector<std::string> skipped;  ///< items that could not be evaluated
};

/// Benchmark selection and thresholding on already-counted true positives.
/// The benchmark is the first model with the maximal count.
PruneReport select_retained(std::vector<std::pair<std::string, std::size_t>> per_model_tp,
                            double factor = 0.95);

struct PruneItem {
  std::string key;
  ClassIndex truth = 0;
};

struct PruneOptions {
  double factor = 0.95;
  std::size_t workers = 1;
};

/// Loads the crops for one validation item. May throw; a throwing item is
/// skipped with a warning.
using CropLoader = std::function<PreparedCrops(const PruneItem&)>;

/// Counts, for every member, the validation items whose model_vote label
/// equals the truth, then applies select_retained. Fails only when no item
/// can be evaluated.
PruneReport prune(const EnsembleSpec& spec, std::span<const PruneItem> validation,
                  const CropLoader& load, const PruneOptions& options = {});

}  // namespace retigrade
