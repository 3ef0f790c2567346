#include "retigrade/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "retigrade/batch.hpp"
#include "retigrade/dme_pipeline.hpp"
#include "retigrade/dr_pipeline.hpp"
#include "retigrade/error.hpp"
#include "retigrade/evaluation.hpp"
#include "retigrade/fixtures.hpp"
#include "retigrade/golden.hpp"
#include "retigrade/image_io.hpp"

namespace retigrade {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kTieNote =
    "note: voting ties resolve to the lowest class index, i.e. the least severe grade";

struct Options {
  std::vector<std::string> manifests;
  std::string images;
  std::string labels;
  std::string out;
  std::string out_manifest;
  std::string task = "dr";
  std::string ensemble;
  std::string split = "all";
  std::string counts;
  bool no_tencrop = false;
  double threshold_factor = 0.95;
  std::size_t workers = default_workers();
  std::uint64_t seed = 0;
};

CropMode crop_mode(const Options& o) { return o.no_tencrop ? CropMode::kCenterOnly : CropMode::kTenCrop; }

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << content;
  if (!os) throw Error("cannot write " + path.string());
}

std::vector<fs::path> manifest_paths(const Options& o) {
  if (o.manifests.empty()) throw ConfigError("--manifest is required");
  std::vector<fs::path> paths;
  for (const auto& m : o.manifests) {
    if (!fs::exists(m)) throw ConfigError("manifest not found: " + m);
    paths.emplace_back(m);
  }
  return paths;
}

void require_task(const Options& o) {
  if (o.task != "dr" && o.task != "dme") throw ConfigError("--task must be dr or dme");
}

std::unique_ptr<Grader> make_grader(const Options& o, const Manifest& m) {
  if (o.task == "dr") {
    return std::make_unique<DrPipeline>(ensemble_for(m, Task::kDrPrimary), ensemble_for(m, Task::kDrExpert),
                                        crop_mode(o));
  }
  return std::make_unique<DmePipeline>(ensemble_for(m, Task::kDmeM1), ensemble_for(m, Task::kDmeM2), crop_mode(o));
}

LabeledDataset dataset_for(const Options& o, const ClassSet& classes) {
  if (o.labels.empty()) throw ConfigError("--labels is required");
  LabeledDataset ds = load_labels(o.labels, classes);
  if (o.split == "all") return ds;
  const auto split = parse_split(o.split);
  if (!split) throw ConfigError("--split must be one of all, train, val, test");
  const bool labelled = std::all_of(ds.items.begin(), ds.items.end(), [](const auto& i) { return i.split; });
  if (!labelled) assign_splits(ds, o.seed);
  return select_split(ds, *split);
}

int cmd_prune(const Options& o, std::ostream& out) {
  const auto paths = manifest_paths(o);
  if (paths.size() != 1) throw ConfigError("prune takes exactly one --manifest");
  if (o.ensemble.empty()) throw ConfigError("--ensemble is required (dr-primary, dr-expert, dme-m1, dme-m2)");
  if (o.out.empty()) throw ConfigError("--out is required");
  if (o.images.empty()) throw ConfigError("--images is required");
  const Task task = parse_task(o.ensemble);

  const Manifest manifest = load_manifest(paths.front());
  EnsembleSpec spec = ensemble_for(manifest, task);
  const LabeledDataset ds = dataset_for(o, canonical_classes(task));

  std::vector<PruneItem> items;
  for (const auto& i : ds.items) items.push_back({i.filename, i.truth});
  const fs::path images(o.images);
  const CropMode mode = crop_mode(o);
  const CropLoader loader = [&](const PruneItem& item) {
    return prepare_crops(read_image(images / item.key), item.key, mode);
  };
  const PruneReport r = prune(spec, items, loader, {o.threshold_factor, o.workers});

  Json report;
  report["task"] = std::string(to_string(r.task));
  report["rule"] = "retain models with true positives >= ceil(factor * benchmark true positives)";
  report["factor"] = r.factor;
  report["benchmark_id"] = r.benchmark_id;
  report["benchmark_tp"] = r.benchmark_tp;
  report["threshold"] = r.threshold;
  report["per_model_tp"] = Json::object();
  for (const auto& [id, tp] : r.per_model_tp) report["per_model_tp"][id] = tp;
  report["retained"] = r.retained;
  report["evaluated"] = r.evaluated;
  report["skipped"] = r.skipped;
  report["crop_mode"] = o.no_tencrop ? "center" : "ten-crop";
  report["split"] = o.split;
  report["seed"] = o.seed;
  write_file(o.out, report.dump(2) + "\n");

  const fs::path updated = o.out_manifest.empty() ? fs::path(o.out).replace_extension(".manifest.json")
                                                  : fs::path(o.out_manifest);
  if (updated.has_parent_path()) fs::create_directories(updated.parent_path());
  write_retained(paths.front(), updated, task, r.retained);

  out << "benchmark " << r.benchmark_id << " (" << r.benchmark_tp << " true positives), threshold "
      << r.threshold << ", retained " << r.retained.size() << '/' << r.per_model_tp.size() << ":";
  for (const auto& id : r.retained) out << ' ' << id;
  out << "\nreport: " << o.out << "\nmanifest: " << updated.string() << '\n';
  return kExitOk;
}

int cmd_grade(const Options& o, std::ostream& out) {
  require_task(o);
  if (o.images.empty()) throw ConfigError("--images is required");
  if (o.out.empty()) throw ConfigError("--out is required");
  const auto paths = manifest_paths(o);
  const Manifest manifest = load_manifests(paths);
  if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());

  if (o.task == "dr") {
    const DrPipeline pipeline(ensemble_for(manifest, Task::kDrPrimary), ensemble_for(manifest, Task::kDrExpert),
                              crop_mode(o));
    const auto s = grade_dr_batch(o.images, pipeline, o.out, o.workers);
    out << "graded " << s.graded << " image(s), " << s.failures.size() << " failure(s)\n";
    for (std::size_t g = 0; g < kDrGradeCount; ++g) {
      out << "  " << to_string(static_cast<DrGrade>(g)) << ": " << s.grade_counts[g] << '\n';
    }
    out << "  routed to expert: " << s.routed_to_expert << '\n';
    for (const auto& [file, why] : s.failures) out << "  failed " << file << ": " << why << '\n';
  } else {
    const DmePipeline pipeline(ensemble_for(manifest, Task::kDmeM1), ensemble_for(manifest, Task::kDmeM2),
                               crop_mode(o));
    const auto s = grade_dme_batch(o.images, pipeline, o.out, o.workers);
    out << "graded " << s.graded << " image(s), " << s.failures.size() << " failure(s)\n";
    for (std::size_t g = 0; g < kDmeGradeCount; ++g) {
      out << "  " << to_string(static_cast<DmeGrade>(g)) << ": " << s.grade_counts[g] << '\n';
    }
    for (std::size_t c = 0; c < 4; ++c) out << "  case " << c + 1 << ": " << s.case_counts[c] << '\n';
    if (s.contradictions() > 0) {
      out << "warning: " << s.contradictions() << " image(s) with contradicting model outputs (case 4)\n";
    }
    for (const auto& [file, why] : s.failures) out << "  failed " << file << ": " << why << '\n';
  }
  out << kTieNote << '\n' << "report: " << o.out << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  require_task(o);
  if (o.images.empty()) throw ConfigError("--images is required");
  if (o.out.empty()) throw ConfigError("--out is required");
  const Manifest manifest = load_manifests(manifest_paths(o));
  const auto grader = make_grader(o, manifest);
  const LabeledDataset ds = dataset_for(o, grader->output_classes());
  const EvaluationResult r = evaluate(*grader, ds, o.images, o.workers);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  write_file(dir / "confusion.csv", matrix_to_csv(r.matrix));
  write_file(dir / "confusion.txt", matrix_to_table(r.matrix));
  write_file(dir / "predictions.csv", log_to_csv(r));
  std::ostringstream summary;
  summary << "task: " << o.task << "\nsplit: " << o.split << "\nseed: " << o.seed
          << "\nevaluated: " << r.log.size() << "\nskipped: " << r.skipped.size() << '\n'
          << format_accuracy(r.matrix.accuracy()) << '\n';
  for (const auto& [file, why] : r.skipped) summary << "skipped " << file << ": " << why << '\n';
  write_file(dir / "summary.txt", summary.str());

  out << matrix_to_table(r.matrix);
  for (const auto& [file, why] : r.skipped) out << "skipped " << file << ": " << why << '\n';
  out << format_accuracy(r.matrix.accuracy()) << '\n';
  return kExitOk;
}

int cmd_golden(std::ostream& out) {
  const GoldenReport r = golden_check();
  out << format_golden(r);
  return r.all_pass() ? kExitOk : kExitRuntime;
}

void dump_tensor(const fs::path& path, const TensorImage& t) {
  std::ofstream os(path, std::ios::binary);
  os.write(reinterpret_cast<const char*>(t.values().data()), static_cast<std::streamsize>(t.values().size_bytes()));
  if (!os) throw Error("cannot write " + path.string());
}

int cmd_preprocess_dump(const Options& o, std::ostream& out) {
  if (o.images.empty()) throw ConfigError("--images is required");
  if (o.out.empty()) throw ConfigError("--out is required");
  ChannelStats stats;
  if (!o.manifests.empty()) {
    const Manifest m = load_manifests(manifest_paths(o));
    stats = m.models.front().stats;
  }
  std::vector<fs::path> files;
  if (fs::is_directory(o.images)) {
    files = list_images(o.images);
  } else {
    files.emplace_back(o.images);
  }

  const fs::path dir(o.out);
  fs::create_directories(dir);
  Json index = Json::array();
  for (const auto& file : files) {
    const std::string name = file.filename().string();
    const RawImage img = read_image(file);
    const PreparedCrops crops = prepare_crops(img, name, crop_mode(o));
    const auto& standardized = crops.standardized(stats);
    for (std::size_t i = 0; i < crops.size(); ++i) {
      const std::string stem = file.stem().string() + "_crop" + std::to_string(i);
      dump_tensor(dir / (stem + "_minmax.f32"), crops.minmax()[i]);
      dump_tensor(dir / (stem + "_standardized.f32"), standardized[i]);
      index.push_back({{"source", name},
                       {"crop", i},
                       {"position", std::string(to_string(crops.tags()[i].position))},
                       {"flipped", crops.tags()[i].flipped},
                       {"shape", {3, crops.minmax()[i].height(), crops.minmax()[i].width()}},
                       {"minmax", stem + "_minmax.f32"},
                       {"standardized", stem + "_standardized.f32"},
                       {"standardized_checksum", tensor_checksum(standardized[i])}});
    }
  }
  Json doc;
  doc["layout"] = "float32 little-endian, channel-major 3xHxW";
  doc["channel_stats"] = {{"mean", stats.mean}, {"std", stats.std}};
  doc["crops"] = index;
  write_file(dir / "index.json", doc.dump(2) + "\n");
  out << "wrote " << index.size() << " crop tensor pair(s) to " << dir.string() << '\n';
  return kExitOk;
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> counts;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      counts.push_back(std::stoul(field));
    } catch (const std::exception&) {
      throw ConfigError("--counts must be comma-separated integers");
    }
  }
  return counts;
}

int cmd_make_fixture(const Options& o, std::ostream& out) {
  require_task(o);
  if (o.out.empty()) throw ConfigError("--out is required");
  const bool dr = o.task == "dr";
  const ClassSet& classes = dr ? dr_grade_classes() : dme_grade_classes();

  fixtures::FixtureSpec spec;
  spec.seed = o.seed;
  spec.class_counts = o.counts.empty() ? (dr ? std::vector<std::size_t>{15, 12, 14, 9, 6}
                                             : std::vector<std::size_t>{19, 5, 20})
                                       : parse_counts(o.counts);
  if (spec.class_counts.size() != classes.size()) {
    throw ConfigError("--counts needs " + std::to_string(classes.size()) + " entries");
  }
  const fs::path dir(o.out);
  const auto images = fixtures::make_images(spec, classes, dir / "images");
  const auto models = dr ? fixtures::dr_truth_echo(images.truths) : fixtures::dme_truth_echo(images.truths);
  fixtures::write_manifest(dir, "manifest.json", models, images.filenames, true);
  out << "wrote " << images.filenames.size() << " image(s), labels and a truth-echo manifest to "
      << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diabetic retinopathy and macular edema grading with voting ensembles", "retigrade"};
  app.require_subcommand(1);
  Options o;

  const auto add_manifest = [&](CLI::App* c) {
    c->add_option("--manifest", o.manifests, "Model manifest (JSON); repeatable")->envname("RETIGRADE_MANIFEST");
  };
  const auto add_common = [&](CLI::App* c) {
    c->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber)->envname("RETIGRADE_WORKERS");
    c->add_flag("--no-tencrop", o.no_tencrop, "Vote over the center crop only");
  };
  const auto add_split = [&](CLI::App* c) {
    c->add_option("--split", o.split, "all, train, val or test (seeded 70/20/10 when the CSV has no split column)");
    c->add_option("--seed", o.seed, "Seed for split assignment")->envname("RETIGRADE_SEED");
  };

  auto* prune_cmd = app.add_subcommand("prune", "Select the retained ensemble members on a validation set");
  add_manifest(prune_cmd);
  add_common(prune_cmd);
  add_split(prune_cmd);
  prune_cmd->add_option("--ensemble", o.ensemble, "dr-primary, dr-expert, dme-m1 or dme-m2");
  prune_cmd->add_option("--images", o.images, "Image directory")->envname("RETIGRADE_IMAGES");
  prune_cmd->add_option("--labels", o.labels, "Validation labels CSV");
  prune_cmd->add_option("--out", o.out, "Prune report (JSON)");
  prune_cmd->add_option("--out-manifest", o.out_manifest, "Updated manifest (default: <out>.manifest.json)");
  prune_cmd->add_option("--threshold-factor", o.threshold_factor, "Share of the benchmark's true positives")
      ->check(CLI::Range(0.0, 1.0));

  auto* grade_cmd = app.add_subcommand("grade", "Grade every image in a directory");
  add_manifest(grade_cmd);
  add_common(grade_cmd);
  grade_cmd->add_option("--task", o.task, "dr or dme")->envname("RETIGRADE_TASK");
  grade_cmd->add_option("--images", o.images, "Image directory")->envname("RETIGRADE_IMAGES");
  grade_cmd->add_option("--out", o.out, "Report CSV");

  auto* eval_cmd = app.add_subcommand("eval", "Confusion matrix and accuracy on a labeled set");
  add_manifest(eval_cmd);
  add_common(eval_cmd);
  add_split(eval_cmd);
  eval_cmd->add_option("--task", o.task, "dr or dme")->envname("RETIGRADE_TASK");
  eval_cmd->add_option("--images", o.images, "Image directory")->envname("RETIGRADE_IMAGES");
  eval_cmd->add_option("--labels", o.labels, "Labels CSV (filename,label[,split])");
  eval_cmd->add_option("--out", o.out, "Output directory");

  auto* golden_cmd = app.add_subcommand("golden", "Check the embedded reference confusion matrices");

  auto* dump_cmd = app.add_subcommand("preprocess-dump", "Write the preprocessed crop tensors of images");
  add_manifest(dump_cmd);
  dump_cmd->add_flag("--no-tencrop", o.no_tencrop, "Center crop only");
  dump_cmd->add_option("--images", o.images, "Image file or directory");
  dump_cmd->add_option("--out", o.out, "Output directory");

  auto* fixture_cmd = app.add_subcommand("make-fixture", "Generate synthetic images, labels and a truth-echo manifest");
  fixture_cmd->add_option("--task", o.task, "dr or dme");
  fixture_cmd->add_option("--out", o.out, "Output directory");
  fixture_cmd->add_option("--seed", o.seed, "Generator seed");
  fixture_cmd->add_option("--counts", o.counts, "Images per grade, comma-separated");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (prune_cmd->parsed()) return cmd_prune(o, out);
    if (grade_cmd->parsed()) return cmd_grade(o, out);
    if (eval_cmd->parsed()) return cmd_eval(o, out);
    if (golden_cmd->parsed()) return cmd_golden(out);
    if (dump_cmd->parsed()) return cmd_preprocess_dump(o, out);
    if (fixture_cmd->parsed()) return cmd_make_fixture(o, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace retigrade
