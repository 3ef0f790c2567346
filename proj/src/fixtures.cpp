#include "retigrade/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "retigrade/error.hpp"
#include "retigrade/image_io.hpp"

namespace retigrade::fixtures {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr std::size_t kCropsPerImage = 10;

std::vector<std::size_t> permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

std::size_t exact_count(double rate, std::size_t n, const std::string& what) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidInput(what + ": rate must be in [0, 1]");
  const double x = rate * static_cast<double>(n);
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-6) {
    throw InvalidInput(what + ": " + std::to_string(rate) + " x " + std::to_string(n) +
                       " is not a whole number of images");
  }
  return static_cast<std::size_t>(r);
}

ClassIndex other_class(ClassIndex label, std::size_t k, std::mt19937_64& rng) {
  return (label + 1 + static_cast<ClassIndex>(rng() % (k - 1))) % k;
}

}  // namespace

std::size_t FixtureSpec::image_count() const noexcept {
  return std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
}

std::vector<std::size_t> counts_from_distribution(std::span<const double> probabilities, std::size_t n) {
  if (probabilities.empty()) throw InvalidInput("class distribution is empty");
  double sum = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0)) throw InvalidInput("class probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("class probabilities must sum to 1");

  std::vector<std::size_t> counts(probabilities.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double exact = probabilities[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += counts[i];
    remainders.emplace_back(exact - static_cast<double>(counts[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[remainders[i % remainders.size()].second];
  return counts;
}

std::vector<ClassIndex> fixture_truths(const FixtureSpec& spec) {
  std::vector<ClassIndex> truths;
  for (std::size_t c = 0; c < spec.class_counts.size(); ++c) truths.insert(truths.end(), spec.class_counts[c], c);
  std::mt19937_64 rng(spec.seed);
  const auto order = permutation(truths.size(), rng);
  std::vector<ClassIndex> shuffled(truths.size());
  for (std::size_t i = 0; i < truths.size(); ++i) shuffled[i] = truths[order[i]];
  return shuffled;
}

std::string fixture_filename(std::size_t index) {
  std::string digits = std::to_string(index);
  return "img_" + std::string(digits.size() < 4 ? 4 - digits.size() : 0, '0') + digits + ".png";
}

ImageFixture make_images(const FixtureSpec& spec, const ClassSet& classes, const fs::path& dir) {
  if (spec.class_counts.size() != classes.size()) {
    throw InvalidInput("fixture: class_counts has " + std::to_string(spec.class_counts.size()) +
                       " entries for " + std::to_string(classes.size()) + " classes");
  }
  if (spec.image_size < 16) throw InvalidInput("fixture: image_size must be at least 16");
  fs::create_directories(dir);

  ImageFixture fx;
  fx.truths = fixture_truths(spec);
  const std::size_t size = spec.image_size;
  const std::size_t block = size / 4;
  for (std::size_t i = 0; i < fx.truths.size(); ++i) {
    std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ULL + i + 1);
    RawImage img(size, size);
    for (float& v : img.pixels()) v = static_cast<float>(40 + rng() % 60);
    // Marker block: position and brightness encode the class.
    const ClassIndex c = fx.truths[i];
    const std::size_t top = (c * block) % (size - block);
    const float level = static_cast<float>(120 + (135 * c) / std::max<std::size_t>(classes.size() - 1, 1));
    for (std::size_t y = top; y < top + block; ++y) {
      for (std::size_t x = block; x < 2 * block; ++x) {
        for (std::size_t ch = 0; ch < 3; ++ch) img.at(y, x, ch) = level;
      }
    }
    fx.filenames.push_back(fixture_filename(i));
    write_png(dir / fx.filenames.back(), img);
  }

  std::ofstream csv(dir / "labels.csv", std::ios::binary);
  csv << "filename,label\n";
  for (std::size_t i = 0; i < fx.truths.size(); ++i) {
    csv << fx.filenames[i] << ',' << classes.name(fx.truths[i]) << '\n';
  }
  if (!csv) throw Error("cannot write " + (dir / "labels.csv").string());
  return fx;
}

TableFixture make_table_models(const FixtureSpec& spec, Task task, std::span<const ClassIndex> truths) {
  const std::size_t n = truths.size();
  const std::size_t k = canonical_classes(task).size();
  for (ClassIndex t : truths) {
    if (t >= k) throw InvalidInput("fixture: truth label out of range for task");
  }
  if (spec.crop_dissent > 4) throw InvalidInput("fixture: crop_dissent must be at most 4");

  std::mt19937_64 rng(spec.seed ^ 0xA5A5A5A5A5A5A5A5ULL);
  std::vector<std::size_t> errors;
  for (const auto& m : spec.models) errors.push_back(n - exact_count(m.accuracy, n, "model " + m.id));

  std::vector<std::vector<std::size_t>> error_sets(spec.models.size());
  const auto base = permutation(n, rng);
  for (std::size_t m = 0; m < spec.models.size(); ++m) {
    if (m == 0) {
      error_sets[0].assign(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(errors[0]));
    } else if (m == 1 && spec.joint_error_rate) {
      const std::size_t joint = exact_count(*spec.joint_error_rate, n, "joint error rate");
      if (joint > std::min(errors[0], errors[1]) || errors[1] - joint > n - errors[0]) {
        throw InvalidInput("fixture: joint error rate is not realizable with the given accuracies");
      }
      // Shared errors come from model 0's set, the rest from its complement.
      error_sets[1].assign(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(joint));
      error_sets[1].insert(error_sets[1].end(), base.begin() + static_cast<std::ptrdiff_t>(errors[0]),
                           base.begin() + static_cast<std::ptrdiff_t>(errors[0] + errors[1] - joint));
    } else {
      const auto order = permutation(n, rng);
      error_sets[m].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(errors[m]));
    }
  }

  TableFixture fx;
  fx.task = task;
  for (std::size_t m = 0; m < spec.models.size(); ++m) {
    TableModel model;
    model.id = spec.models[m].id;
    model.labels.assign(truths.begin(), truths.end());
    for (std::size_t i : error_sets[m]) model.labels[i] = other_class(truths[i], k, rng);
    if (spec.crop_dissent > 0) {
      for (ClassIndex label : model.labels) {
        std::vector<ClassIndex> crops(kCropsPerImage, label);
        const auto slots = permutation(kCropsPerImage, rng);
        const ClassIndex dissent = other_class(label, k, rng);
        for (std::size_t d = 0; d < spec.crop_dissent; ++d) crops[slots[d]] = dissent;
        model.crop_labels.push_back(std::move(crops));
      }
    }
    fx.models.push_back(std::move(model));
  }
  return fx;
}

TableFixture make_echo_models(Task task, std::span<const ClassIndex> labels, std::span<const std::string> ids) {
  TableFixture fx;
  fx.task = task;
  for (const auto& id : ids) fx.models.push_back({id, {labels.begin(), labels.end()}, {}});
  return fx;
}

void write_manifest(const fs::path& dir, const std::string& manifest_name, std::span<const TableFixture> fixtures,
                    std::span<const std::string> filenames, bool retain_all) {
  fs::create_directories(dir / "tables");
  Json manifest;
  manifest["models"] = Json::array();
  Json retained = Json::object();
  for (const auto& fx : fixtures) {
    const auto& classes = canonical_classes(fx.task);
    const std::string task(to_string(fx.task));
    for (const auto& model : fx.models) {
      if (model.labels.size() != filenames.size()) {
        throw InvalidInput("fixture model '" + model.id + "' has a label count different from the image count");
      }
      Json entries = Json::object();
      for (std::size_t i = 0; i < filenames.size(); ++i) {
        if (model.crop_labels.empty()) {
          entries[filenames[i]] = {{"label", classes.name(model.labels[i])}};
        } else {
          Json crops = Json::array();
          for (ClassIndex l : model.crop_labels[i]) crops.push_back(classes.name(l));
          entries[filenames[i]] = {{"crop_labels", crops}};
        }
      }
      const std::string rel = "tables/" + model.id + ".json";
      std::ofstream table(dir / rel, std::ios::binary);
      table << Json{{"entries", entries}}.dump(1) << '\n';
      if (!table) throw Error("cannot write " + (dir / rel).string());

      manifest["models"].push_back({{"id", model.id}, {"kind", "table"}, {"task", task}, {"path", rel}});
      if (retain_all) retained[task].push_back(model.id);
    }
  }
  if (retain_all) manifest["retained"] = retained;
  std::ofstream out(dir / manifest_name, std::ios::binary);
  out << manifest.dump(2) << '\n';
  if (!out) throw Error("cannot write " + (dir / manifest_name).string());
}

namespace {

std::vector<std::string> numbered_ids(const std::string& prefix, std::size_t count) {
  std::vector<std::string> ids;
  for (std::size_t i = 1; i <= count; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

}  // namespace

std::vector<TableFixture> dr_truth_echo(std::span<const ClassIndex> dr_grades, std::size_t models_per_ensemble) {
  std::vector<ClassIndex> primary;
  std::vector<ClassIndex> expert;
  for (ClassIndex g : dr_grades) {
    if (g >= 5) throw InvalidInput("DR grade out of range");
    primary.push_back(std::min<ClassIndex>(g, 3));
    expert.push_back(g == 4 ? 1 : 0);
  }
  return {make_echo_models(Task::kDrPrimary, primary, numbered_ids("primary_echo_", models_per_ensemble)),
          make_echo_models(Task::kDrExpert, expert, numbered_ids("expert_echo_", models_per_ensemble))};
}

std::vector<TableFixture> dme_truth_echo(std::span<const ClassIndex> dme_grades, std::size_t models_per_ensemble) {
  std::vector<ClassIndex> m1;
  std::vector<ClassIndex> m2;
  for (ClassIndex g : dme_grades) {
    if (g >= 3) throw InvalidInput("DME grade out of range");
    m1.push_back(g == 0 ? 0 : 1);
    m2.push_back(g == 2 ? 1 : 0);
  }
  return {make_echo_models(Task::kDmeM1, m1, numbered_ids("m1_echo_", models_per_ensemble)),
          make_echo_models(Task::kDmeM2, m2, numbered_ids("m2_echo_", models_per_ensemble))};
}

}  // namespace retigrade::fixtures
