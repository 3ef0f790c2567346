#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "retigrade/classifier.hpp"

namespace retigrade::fixtures {

struct ModelProfile {
  std::string id;
  double accuracy = 1.0;
};

/// Deterministic synthetic dataset + table-model description.
struct FixtureSpec {
  std::uint64_t seed = 0;
  std::vector<std::size_t> class_counts;  ///< images per class
  std::vector<ModelProfile> models;
  /// Fraction of images both models[0] and models[1] get wrong.
  std::optional<double> joint_error_rate;
  /// Crops per image (0..4) that vote for a wrong class without changing the
  /// model's per-image label.
  std::size_t crop_dissent = 0;
  std::size_t image_size = 64;

  std::size_t image_count() const noexcept;
};

/// Class counts from probabilities (largest remainder). Throws InvalidInput
/// unless the probabilities are non-negative and sum to 1.
std::vector<std::size_t> counts_from_distribution(std::span<const double> probabilities,
                                                  std::size_t n);

/// Truth labels in image order: the class histogram, shuffled by seed.
std::vector<ClassIndex> fixture_truths(const FixtureSpec& spec);

std::string fixture_filename(std::size_t index);

struct ImageFixture {
  std::vector<std::string> filenames;
  std::vector<ClassIndex> truths;
};

/// Writes `img_NNNN.png` files (seeded noise plus a class-coded marker block)
/// and `labels.csv` into `dir`.
ImageFixture make_images(const FixtureSpec& spec, const ClassSet& classes,
                         const std::filesystem::path& dir);

struct TableModel {
  std::string id;
  std::vector<ClassIndex> labels;  ///< per image
  std::vector<std::vector<ClassIndex>> crop_labels;  ///< per image, 10 crops
};

struct TableFixture {
  Task task = Task::kDrPrimary;
  std::vector<TableModel> models;
};

/// Builds table models whose per-image labels hit each profile's accuracy
/// exactly. Throws InvalidInput when accuracy * n (or the joint error count)
/// is not an integer or not realizable.
TableFixture make_table_models(const FixtureSpec& spec, Task task,
                               std::span<const ClassIndex> truths);

/// Models that reproduce the given labels exactly.
TableFixture make_echo_models(Task task, std::span<const ClassIndex> labels,
                              std::span<const std::string> ids);

/// Writes tables/<id>.json for every model and a manifest listing them.
/// With `retain_all`, each task's retained stanza lists all of its models.
void write_manifest(const std::filesystem::path& dir, const std::string& manifest_name,
                    std::span<const TableFixture> fixtures, std::span<const std::string> filenames,
                    bool retain_all);

/// Primary + expert models that echo 5-grade DR truths.
std::vector<TableFixture> dr_truth_echo(std::span<const ClassIndex> dr_grades,
                                        std::size_t models_per_ensemble = 3);
/// m1 + m2 models that echo 3-grade DME truths.
std::vector<TableFixture> dme_truth_echo(std::span<const ClassIndex> dme_grades,
                                         std::size_t models_per_ensemble = 3);

/// Serializes a Flatten -> Gemm ONNX graph computing scores = W x + b on a
/// 1x3xHxW input. `weights` is K x (3*H*W) row-major.
void write_linear_onnx(const std::filesystem::path& path, std::span<const float> weights,
                       std::span<const float> bias, std::size_t height, std::size_t width);

}  // namespace retigrade::fixtures
