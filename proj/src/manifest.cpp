#include "retigrade/manifest.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "retigrade/backends.hpp"
#include "retigrade/error.hpp"

namespace retigrade {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

Json read_json(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string(what) + " not found: " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string(what) + " " + path.string() + " is not valid JSON: " + e.what());
  }
}

ChannelStats parse_stats(const Json& j) {
  ChannelStats s;
  const auto& mean = j.at("mean");
  const auto& sd = j.at("std");
  if (!mean.is_array() || mean.size() != 3 || !sd.is_array() || sd.size() != 3) {
    throw ConfigError("channel_stats needs three-element 'mean' and 'std' arrays");
  }
  for (std::size_t c = 0; c < 3; ++c) {
    s.mean[c] = mean[c].get<float>();
    s.std[c] = sd[c].get<float>();
  }
  s.validate();
  return s;
}

std::vector<float> parse_scores(const Json& j, const ClassSet& classes) {
  if (!j.is_array()) throw ConfigError("scores must be an array");
  auto scores = j.get<std::vector<float>>();
  if (scores.size() != classes.size()) {
    throw ConfigError("score vector has " + std::to_string(scores.size()) +
                      " entries but the task has " + std::to_string(classes.size()) + " classes");
  }
  return scores;
}

ClassIndex parse_label(const Json& j, const ClassSet& classes) {
  if (j.is_string()) {
    if (auto idx = classes.find(j.get<std::string>())) return *idx;
    throw ConfigError("unknown class '" + j.get<std::string>() + "'");
  }
  if (j.is_number_unsigned() && j.get<std::size_t>() < classes.size()) return j.get<std::size_t>();
  throw ConfigError("label " + j.dump() + " is not a class of this task");
}

std::vector<float> one_hot(ClassIndex label, std::size_t k) {
  std::vector<float> v(k, 0.0F);
  v[label] = 1.0F;
  return v;
}

TableClassifier::Entry parse_entry(const Json& j, const ClassSet& classes) {
  TableClassifier::Entry e;
  if (j.contains("label")) {
    e.per_crop.push_back(one_hot(parse_label(j["label"], classes), classes.size()));
  } else if (j.contains("scores")) {
    e.per_crop.push_back(parse_scores(j["scores"], classes));
  } else if (j.contains("crop_labels")) {
    for (const auto& l : j["crop_labels"]) e.per_crop.push_back(one_hot(parse_label(l, classes), classes.size()));
  } else if (j.contains("crop_scores")) {
    for (const auto& s : j["crop_scores"]) e.per_crop.push_back(parse_scores(s, classes));
  } else {
    throw ConfigError("table entry needs one of label, scores, crop_labels, crop_scores");
  }
  if (e.per_crop.empty()) throw ConfigError("table entry has no predictions");
  return e;
}

std::shared_ptr<const Classifier> parse_table(const Json& j, const ClassSet& classes) {
  std::map<std::string, TableClassifier::Entry, std::less<>> entries;
  if (j.contains("entries")) {
    for (const auto& [key, value] : j["entries"].items()) {
      try {
        entries.emplace(key, parse_entry(value, classes));
      } catch (const ConfigError& e) {
        throw ConfigError("entry '" + key + "': " + e.what());
      }
    }
  }
  std::optional<std::vector<float>> fallback;
  if (j.contains("default")) {
    auto e = parse_entry(j["default"], classes);
    if (e.per_crop.size() != 1) throw ConfigError("table default must be a single prediction");
    fallback = std::move(e.per_crop.front());
  }
  return std::make_shared<TableClassifier>(std::move(entries), std::move(fallback));
}

ModelHandle parse_model(const Json& j, const fs::path& base, const ChannelStats& default_stats) {
  ModelHandle h;
  h.id = j.at("id").get<std::string>();
  if (h.id.empty()) throw ConfigError("empty id");
  h.task = parse_task(j.at("task").get<std::string>());
  h.class_set = canonical_classes(h.task);
  if (j.contains("class_set")) {
    const ClassSet declared(j["class_set"].get<std::vector<std::string>>());
    if (!(declared == h.class_set)) {
      std::string expected;
      for (const auto& l : h.class_set.labels()) expected += (expected.empty() ? "" : ", ") + l;
      throw ConfigError("class_set does not match task " + std::string(to_string(h.task)) +
                        " (expected " + expected + ", in that order)");
    }
  }
  h.stats = j.contains("channel_stats") ? parse_stats(j["channel_stats"]) : default_stats;

  const auto kind = j.at("kind").get<std::string>();
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    if (path.is_relative()) path = base / path;
    if (!fs::exists(path)) throw ConfigError("model file not found: " + path.string());
    h.source = path.string();
    return path;
  };

  if (kind == "stub") {
    h.kind = BackendKind::kStub;
    h.source = "inline";
    if (j.contains("scores")) {
      h.backend = std::make_shared<StubClassifier>(parse_scores(j["scores"], h.class_set));
    } else if (j.contains("label")) {
      h.backend = StubClassifier::always(parse_label(j["label"], h.class_set), h.class_set.size());
    } else {
      throw ConfigError("stub model needs 'label' or 'scores'");
    }
  } else if (kind == "table") {
    h.kind = BackendKind::kTable;
    if (j.contains("table")) {
      h.source = "inline";
      h.backend = parse_table(j["table"], h.class_set);
    } else {
      const auto path = resolve(j.at("path").get<std::string>());
      h.backend = load_table(path, h.class_set);
    }
  } else if (kind == "onnx-file") {
    h.kind = BackendKind::kOnnxFile;
    h.backend = std::make_shared<OnnxClassifier>(resolve(j.at("path").get<std::string>()));
  } else {
    throw ConfigError("unknown kind '" + kind + "' (expected stub, table or onnx-file)");
  }

  const bool single_threaded = j.value("single_threaded", false);
  if (single_threaded || !h.backend->thread_safe()) h.call_mutex = std::make_shared<std::mutex>();
  return h;
}

}  // namespace

std::shared_ptr<const Classifier> load_table(const fs::path& path, const ClassSet& classes) {
  const Json j = read_json(path, "table file");
  try {
    return parse_table(j, classes);
  } catch (const ConfigError& e) {
    throw ConfigError("table " + path.string() + ": " + e.what());
  } catch (const Json::exception& e) {
    throw ConfigError("table " + path.string() + ": " + e.what());
  }
}

Manifest load_manifest(const fs::path& path) {
  const Json doc = read_json(path, "manifest");
  const fs::path base = path.parent_path();
  const std::string where = "manifest " + path.string();

  Manifest m;
  ChannelStats default_stats;
  try {
    if (doc.contains("channel_stats")) default_stats = parse_stats(doc["channel_stats"]);
  } catch (const std::exception& e) {
    throw ConfigError(where + ": channel_stats: " + e.what());
  }

  if (!doc.contains("models") || !doc["models"].is_array() || doc["models"].empty()) {
    throw ConfigError(where + ": 'models' must be a nonempty list");
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < doc["models"].size(); ++i) {
    const auto& entry = doc["models"][i];
    std::string label = "models[" + std::to_string(i) + "]";
    if (entry.is_object() && entry.contains("id") && entry["id"].is_string()) {
      label += " '" + entry["id"].get<std::string>() + "'";
    }
    try {
      ModelHandle h = parse_model(entry, base, default_stats);
      if (!ids.insert(h.id).second) throw ConfigError("duplicate id");
      m.models.push_back(std::move(h));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + label + ": " + e.what());
    } catch (const Json::exception& e) {
      throw ConfigError(where + ": " + label + ": " + e.what());
    }
  }

  if (doc.contains("retained")) {
    try {
      for (const auto& [task_name, list] : doc["retained"].items()) {
        m.retained[parse_task(task_name)] = list.get<std::vector<std::string>>();
      }
    } catch (const std::exception& e) {
      throw ConfigError(where + ": retained: " + e.what());
    }
  }
  return m;
}

Manifest load_manifests(std::span<const fs::path> paths) {
  if (paths.empty()) throw ConfigError("no manifest given");
  Manifest merged;
  std::set<std::string> ids;
  for (const auto& p : paths) {
    Manifest m = load_manifest(p);
    for (auto& h : m.models) {
      if (!ids.insert(h.id).second) {
        throw ConfigError("manifest " + p.string() + ": model id '" + h.id + "' already defined");
      }
      merged.models.push_back(std::move(h));
    }
    for (auto& [task, list] : m.retained) {
      auto& dst = merged.retained[task];
      dst.insert(dst.end(), list.begin(), list.end());
    }
  }
  return merged;
}

void write_retained(const fs::path& in, const fs::path& out, Task task,
                    const std::vector<std::string>& ids) {
  Json doc = read_json(in, "manifest");
  const fs::path in_dir = fs::weakly_canonical(fs::absolute(in).parent_path());
  const fs::path out_dir = fs::weakly_canonical(fs::absolute(out).parent_path());
  if (doc.contains("models") && in_dir != out_dir) {
    for (auto& model : doc["models"]) {
      if (!model.contains("path")) continue;
      const fs::path p(model["path"].get<std::string>());
      if (p.is_relative()) {
        model["path"] = fs::relative(fs::weakly_canonical(in_dir / p), out_dir).generic_string();
      }
    }
  }
  doc["retained"][std::string(to_string(task))] = ids;
  std::ofstream os(out);
  if (!os) throw Error("cannot write manifest: " + out.string());
  os << doc.dump(2) << '\n';
}

}  // namespace retigrade
