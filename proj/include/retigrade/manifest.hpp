#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "retigrade/classifier.hpp"

namespace retigrade {

/// Parsed model manifest (JSON).
///
///   {
///     "channel_stats": {"mean": [r, g, b], "std": [r, g, b]},   // optional default
///     "models": [
///       {"id": "resnet34", "kind": "onnx-file", "task": "dr-primary",
///        "path": "resnet34.onnx", "class_set": [...], "channel_stats": {...},
///        "single_threaded": false},
///       {"id": "s1", "kind": "stub", "task": "dme-m1", "label": "NoExudates"},
///       {"id": "t1", "kind": "table", "task": "dr-expert", "path": "t1.json"}
///     ],
///     "retained": {"dr-primary": ["resnet34", ...]}                // written by prune
///   }
///
/// Relative paths resolve against the manifest's directory.
struct Manifest {
  std::vector<ModelHandle> models;
  std::map<Task, std::vector<std::string>> retained;
};

/// Loads and validates a manifest: unique ids, known kinds and tasks, class
/// sets equal to the task's canonical order, score vectors of length K, and
/// existing model files. Any violation throws ConfigError naming the entry.
Manifest load_manifest(const std::filesystem::path& path);

/// Loads several manifests and concatenates them. Ids must stay unique.
Manifest load_manifests(std::span<const std::filesystem::path> paths);

/// Parses a table-backend file (see TableClassifier) for a task with K classes.
std::shared_ptr<const Classifier> load_table(const std::filesystem::path& path,
                                             const ClassSet& classes);

/// Copies the manifest at `in` to `out` with the retained stanza for `task`
/// replaced by `ids`. Relative model paths are rebased onto `out`'s directory.
void write_retained(const std::filesystem::path& in, const std::filesystem::path& out, Task task,
                    const std::vector<std::string>& ids);

}  // namespace retigrade
