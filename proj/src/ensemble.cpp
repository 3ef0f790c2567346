#include "retigrade/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <set>

#include "retigrade/batch.hpp"
#include "retigrade/error.hpp"

namespace retigrade {

namespace {

std::vector<std::size_t> tally(std::span<const ClassIndex> labels, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (ClassIndex l : labels) {
    if (l >= num_classes) {
      throw InvalidInput("label " + std::to_string(l) + " out of range for " +
                         std::to_string(num_classes) + " classes");
    }
    ++counts[l];
  }
  return counts;
}

ClassIndex first_max(const std::vector<std::size_t>& counts) {
  return static_cast<ClassIndex>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

ClassIndex vote(std::span<const ClassIndex> labels, std::size_t num_classes) {
  if (labels.empty()) throw InvalidInput("vote over an empty label list");
  return first_max(tally(labels, num_classes));
}

std::vector<const ModelHandle*> EnsembleSpec::retained() const {
  std::vector<const ModelHandle*> out;
  for (const auto& m : members) {
    if (std::find(retained_ids.begin(), retained_ids.end(), m.id) != retained_ids.end()) {
      out.push_back(&m);
    }
  }
  return out;
}

void EnsembleSpec::validate() const {
  std::set<std::string> ids;
  for (const auto& m : members) {
    if (m.task != task) {
      throw ConfigError("model '" + m.id + "' belongs to task " + std::string(to_string(m.task)) +
                        ", not " + std::string(to_string(task)));
    }
    if (!ids.insert(m.id).second) throw ConfigError("duplicate model id '" + m.id + "'");
  }
  for (const auto& r : retained_ids) {
    if (!ids.contains(r)) {
      throw ConfigError("retained id '" + r + "' is not a member of the " +
                        std::string(to_string(task)) + " ensemble");
    }
  }
  if (pruned && retained_ids.empty()) {
    throw ConfigError("pruned " + std::string(to_string(task)) + " ensemble retains no models");
  }
}

void require_pruned(const EnsembleSpec& spec, Task task) {
  if (spec.task != task) {
    throw ConfigError("expected a " + std::string(to_string(task)) + " ensemble, got " +
                      std::string(to_string(spec.task)));
  }
  spec.validate();
  if (!spec.pruned || spec.retained().empty()) {
    throw ConfigError(std::string(to_string(task)) + " ensemble must be pruned with at least one retained model");
  }
}

EnsembleSpec ensemble_for(const Manifest& manifest, Task task) {
  EnsembleSpec spec;
  spec.task = task;
  for (const auto& m : manifest.models) {
    if (m.task == task) spec.members.push_back(m);
  }
  if (spec.members.empty()) {
    throw ConfigError("manifest has no models for task " + std::string(to_string(task)));
  }
  if (auto it = manifest.retained.find(task); it != manifest.retained.end()) {
    spec.pruned = true;
    spec.retained_ids = it->second;
  }
  spec.validate();
  return spec;
}

VoteRecord model_vote(const ModelHandle& model, const PreparedCrops& crops) {
  const auto& inputs = crops.standardized(model.stats);
  VoteRecord rec;
  rec.model_id = model.id;
  rec.per_crop_labels.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    rec.per_crop_labels.push_back(predict(model, inputs[i], {crops.key(), i}).label);
  }
  rec.tally = tally(rec.per_crop_labels, model.class_set.size());
  rec.model_label = first_max(rec.tally);
  return rec;
}

EnsembleOutcome ensemble_vote(const EnsembleSpec& spec, const PreparedCrops& crops) {
  if (!spec.pruned) {
    throw ConfigError(std::string(to_string(spec.task)) +
                      " ensemble is not pruned; run prune first or add a retained stanza");
  }
  const auto members = spec.retained();
  if (members.empty()) {
    throw ConfigError(std::string(to_string(spec.task)) + " ensemble has no retained models");
  }
  EnsembleOutcome out;
  std::vector<ClassIndex> labels;
  for (const ModelHandle* m : members) {
    out.votes.push_back(model_vote(*m, crops));
    labels.push_back(out.votes.back().model_label);
  }
  out.label = vote(labels, canonical_classes(spec.task).size());
  return out;
}

PruneReport select_retained(std::vector<std::pair<std::string, std::size_t>> per_model_tp,
                            double factor) {
  if (per_model_tp.empty()) throw ConfigError("prune: ensemble has no members");
  if (!(factor >= 0.0 && factor <= 1.0)) throw ConfigError("prune: threshold factor must be in [0, 1]");

  PruneReport r;
  r.factor = factor;
  const auto best = std::max_element(per_model_tp.begin(), per_model_tp.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  r.benchmark_id = best->first;
  r.benchmark_tp = best->second;
  // The epsilon absorbs binary rounding in products such as 0.95 * 40.
  r.threshold = static_cast<std::size_t>(std::ceil(factor * static_cast<double>(r.benchmark_tp) - 1e-9));
  for (const auto& [id, tp] : per_model_tp) {
    if (tp >= r.threshold) r.retained.push_back(id);
  }
  r.per_model_tp = std::move(per_model_tp);
  return r;
}

PruneReport prune(const EnsembleSpec& spec, std::span<const PruneItem> validation,
                  const CropLoader& load, const PruneOptions& options) {
  if (validation.empty()) throw InvalidInput("prune: validation set is empty");
  spec.validate();
  const std::size_t k = canonical_classes(spec.task).size();
  for (const auto& item : validation) {
    if (item.truth >= k) throw InvalidInput("prune: truth label out of range for '" + item.key + "'");
  }

  // correct[i][m]: model m got item i right; -1 marks a skipped item.
  std::vector<std::vector<int>> correct(validation.size());
  std::vector<std::string> failure(validation.size());
  parallel_for(validation.size(), options.workers, [&](std::size_t i) {
    try {
      const PreparedCrops crops = load(validation[i]);
      std::vector<int> row;
      for (const auto& m : spec.members) {
        row.push_back(model_vote(m, crops).model_label == validation[i].truth ? 1 : 0);
      }
      correct[i] = std::move(row);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      failure[i] = e.what();
    }
  });

  std::vector<std::pair<std::string, std::size_t>> tps;
  for (const auto& m : spec.members) tps.emplace_back(m.id, 0);
  std::size_t evaluated = 0;
  std::vector<std::string> skipped;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    if (correct[i].empty()) {
      std::cerr << "warning: prune: skipping " << validation[i].key << ": " << failure[i] << '\n';
      skipped.push_back(validation[i].key);
      continue;
    }
    ++evaluated;
    for (std::size_t m = 0; m < tps.size(); ++m) tps[m].second += static_cast<std::size_t>(correct[i][m]);
  }
  if (evaluated == 0) throw Error("prune: no validation item could be evaluated");

  PruneReport r = select_retained(std::move(tps), options.factor);
  r.task = spec.task;
  r.evaluated = evaluated;
  r.skipped = std::move(skipped);
  return r;
}

}  // namespace retigrade
