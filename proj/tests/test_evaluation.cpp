#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "retigrade/dme_pipeline.hpp"
#include "retigrade/dr_pipeline.hpp"
#include "retigrade/error.hpp"
#include "retigrade/evaluation.hpp"
#include "retigrade/golden.hpp"
#include "test_support.hpp"

using namespace retigrade;
using namespace retigrade::testing;

namespace {

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const InvalidInput& e) {
    return e.what();
  }
  return "";
}

struct DrFixture {
  std::unique_ptr<TempDir> dir;
  fixtures::ImageFixture images;
  LabeledDataset dataset;
};

DrFixture dr_images(const std::string& tag, std::vector<std::size_t> counts, std::uint64_t seed) {
  DrFixture fx;
  fx.dir = std::make_unique<TempDir>(tag);
  fixtures::FixtureSpec spec;
  spec.seed = seed;
  spec.class_counts = std::move(counts);
  spec.image_size = 32;
  fx.images = fixtures::make_images(spec, dr_grade_classes(), fx.dir->path());
  fx.dataset = load_labels(fx.dir->path() / "labels.csv", dr_grade_classes());
  return fx;
}

DrPipeline echo_pipeline(std::span<const ClassIndex> grades, const std::vector<std::string>& names) {
  const auto echo = fixtures::dr_truth_echo(grades);
  return DrPipeline(pruned_spec(Task::kDrPrimary, fixture_handles(echo[0], names)),
                    pruned_spec(Task::kDrExpert, fixture_handles(echo[1], names)));
}

}  // namespace

TEST(LoadLabels, ValidFileWithAndWithoutSplit) {
  TempDir dir("labels_ok");
  write_file(dir / "a.csv", "filename,label\nx.png,Grade0\ny.png,Grade2\n");
  auto ds = load_labels(dir / "a.csv", dme_grade_classes());
  ASSERT_EQ(ds.items.size(), 2u);
  EXPECT_EQ(ds.items[1].truth, 2u);
  EXPECT_FALSE(ds.items[0].split.has_value());

  write_file(dir / "b.csv", "filename,label,split\nx.png,Mild,train\ny.png,PDR,test\nz.png,Normal,val\n");
  ds = load_labels(dir / "b.csv", dr_grade_classes());
  EXPECT_EQ(ds.items[0].split, Split::kTrain);
  EXPECT_EQ(select_split(ds, Split::kTest).items.size(), 1u);
  EXPECT_EQ(select_split(ds, Split::kTest).items[0].filename, "y.png");
}

TEST(LoadLabels, ErrorsNameTheLine) {
  TempDir dir("labels_bad");
  write_file(dir / "a.csv", "filename,label\nx.png,Grade5\n");
  const auto msg = error_of([&] { load_labels(dir / "a.csv", dme_grade_classes()); });
  EXPECT_NE(msg.find(":2:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("Grade5"), std::string::npos) << msg;

  write_file(dir / "b.csv", "filename,label\nx.png,Grade0\nx.png,Grade1\n");
  EXPECT_NE(error_of([&] { load_labels(dir / "b.csv", dme_grade_classes()); }).find(":3:"), std::string::npos);
  write_file(dir / "c.csv", "file,grade\n");
  EXPECT_THROW(load_labels(dir / "c.csv", dme_grade_classes()), InvalidInput);
  write_file(dir / "d.csv", "filename,label,split\nx.png,Grade0,holdout\n");
  EXPECT_THROW(load_labels(dir / "d.csv", dme_grade_classes()), InvalidInput);
  EXPECT_THROW(load_labels(dir / "missing.csv", dme_grade_classes()), InvalidInput);
}

TEST(Splits, SizesFollowSeventyTwentyTen) {
  const auto s = split_sizes(502);
  EXPECT_EQ(s.train, 351u);
  EXPECT_EQ(s.val, 100u);
  EXPECT_EQ(s.test, 51u);
  for (std::size_t n = 0; n < 300; ++n) {
    const auto t = split_sizes(n);
    EXPECT_EQ(t.train + t.val + t.test, n);
    EXPECT_EQ(t.train, n * 7 / 10);
    EXPECT_EQ(t.val, n * 2 / 10);
  }
}

TEST(Splits, SeededAssignmentIsDeterministicAndPartitions) {
  LabeledDataset ds;
  ds.class_set = dme_grade_classes();
  for (std::size_t i = 0; i < 502; ++i) ds.items.push_back({"f" + std::to_string(i), i % 3, std::nullopt});
  auto a = ds, b = ds, c = ds;
  assign_splits(a, 7);
  assign_splits(b, 7);
  assign_splits(c, 8);
  std::size_t differ = 0;
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    EXPECT_EQ(a.items[i].split, b.items[i].split);
    differ += a.items[i].split != c.items[i].split;
  }
  EXPECT_GT(differ, 0u);
  EXPECT_EQ(select_split(a, Split::kTrain).items.size(), 351u);
  EXPECT_EQ(select_split(a, Split::kVal).items.size(), 100u);
  EXPECT_EQ(select_split(a, Split::kTest).items.size(), 51u);
}

TEST(Confusion, ReferenceMatricesRecomputeByHand) {
  // trace / total worked out independently for each matrix.
  const std::vector<std::pair<std::size_t, std::size_t>> expected{{48, 56}, {449, 502}, {42, 44}, {400, 413}};
  const auto pm = reference_matrices();
  ASSERT_EQ(pm.size(), expected.size());
  for (std::size_t i = 0; i < pm.size(); ++i) {
    EXPECT_EQ(pm[i].matrix.trace(), expected[i].first);
    EXPECT_EQ(pm[i].matrix.total(), expected[i].second);
    EXPECT_NEAR(100.0 * pm[i].matrix.accuracy(), pm[i].quoted_percent, 0.1) << pm[i].name;
  }
  EXPECT_EQ(format_accuracy(pm[0].matrix.accuracy()), "Accuracy = 85.71%");
}

TEST(Confusion, FromPredictionsWithRowAndColumnSums) {
  const std::vector<ClassIndex> truths{0, 0, 1, 2, 2, 2};
  const std::vector<ClassIndex> preds{0, 1, 1, 2, 0, 2};
  const auto m = confusion(preds, truths, dme_grade_classes());
  EXPECT_EQ(m.at(0, 0), 1u);
  EXPECT_EQ(m.at(0, 1), 1u);
  EXPECT_EQ(m.at(2, 0), 1u);
  EXPECT_EQ(m.trace(), 4u);
  EXPECT_EQ(m.row_sum(2), 3u);
  EXPECT_EQ(m.col_sum(0), 2u);
  EXPECT_DOUBLE_EQ(m.accuracy(), 4.0 / 6.0);
  EXPECT_EQ(matrix_to_csv(m), "truth\\pred,Grade0,Grade1,Grade2\nGrade0,1,1,0\nGrade1,0,1,0\nGrade2,1,0,2\n");
  EXPECT_THROW(confusion(std::vector<ClassIndex>{0}, truths, dme_grade_classes()), InvalidInput);
  EXPECT_DOUBLE_EQ(ConfusionMatrix(dme_grade_classes()).accuracy(), 0.0);
}

TEST(Confusion, RandomSumsAreConsistent) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = rng() % 200;
    std::vector<ClassIndex> t(n), p(n);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = rng() % 5;
      p[i] = rng() % 5;
      hits += t[i] == p[i];
    }
    const auto m = confusion(p, t, dr_grade_classes());
    EXPECT_EQ(m.trace(), hits);
    std::size_t rows = 0, cols = 0;
    for (ClassIndex c = 0; c < 5; ++c) {
      rows += m.row_sum(c);
      cols += m.col_sum(c);
      EXPECT_EQ(m.row_sum(c), std::size_t(std::count(t.begin(), t.end(), c)));
      EXPECT_EQ(m.col_sum(c), std::size_t(std::count(p.begin(), p.end(), c)));
    }
    EXPECT_EQ(rows, n);
    EXPECT_EQ(cols, n);
  }
}

TEST(Evaluate, TruthEchoIsPerfect) {
  auto fx = dr_images("eval_echo", {4, 3, 3, 2, 2}, 72);
  const auto pipeline = echo_pipeline(fx.images.truths, fx.images.filenames);
  const auto r = evaluate(pipeline, fx.dataset, fx.dir->path(), 2);
  EXPECT_EQ(r.matrix.trace(), 14u);
  EXPECT_EQ(r.matrix.total(), 14u);
  EXPECT_EQ(format_accuracy(r.matrix.accuracy()), "Accuracy = 100.00%");
  EXPECT_TRUE(std::is_sorted(r.log.begin(), r.log.end(),
                             [](const auto& a, const auto& b) { return a.filename < b.filename; }));
}

TEST(Evaluate, AlwaysNormalOnBalancedSet) {
  auto fx = dr_images("eval_normal", {10, 10, 10, 10, 10}, 73);
  const DrPipeline pipeline(pruned_spec(Task::kDrPrimary, {stub_model("n", Task::kDrPrimary, 0)}),
                            pruned_spec(Task::kDrExpert, {stub_model("e", Task::kDrExpert, 0)}));
  const auto r = evaluate(pipeline, fx.dataset, fx.dir->path());
  EXPECT_DOUBLE_EQ(r.matrix.accuracy(), 0.2);
  EXPECT_EQ(r.matrix.col_sum(0), 50u);
}

TEST(Evaluate, RandomPredictionsMatchRecount) {
  auto fx = dr_images("eval_random", {6, 5, 5, 4, 4}, 74);
  std::mt19937_64 rng(75);
  std::vector<ClassIndex> predicted(fx.images.filenames.size());
  for (auto& p : predicted) p = rng() % 5;
  const auto pipeline = echo_pipeline(predicted, fx.images.filenames);
  const auto r = evaluate(pipeline, fx.dataset, fx.dir->path());
  ConfusionMatrix expected(dr_grade_classes());
  for (std::size_t i = 0; i < predicted.size(); ++i) expected.add(fx.images.truths[i], predicted[i]);
  EXPECT_EQ(r.matrix, expected);
}

TEST(Evaluate, InvariantToItemOrderAndWorkers) {
  auto fx = dr_images("eval_order", {5, 4, 4, 3, 2}, 76);
  std::mt19937_64 rng(77);
  std::vector<ClassIndex> predicted(fx.images.filenames.size());
  for (auto& p : predicted) p = rng() % 5;
  const auto pipeline = echo_pipeline(predicted, fx.images.filenames);
  const auto base = evaluate(pipeline, fx.dataset, fx.dir->path(), 1);
  auto shuffled = fx.dataset;
  std::shuffle(shuffled.items.begin(), shuffled.items.end(), rng);
  const auto other = evaluate(pipeline, shuffled, fx.dir->path(), 3);
  EXPECT_EQ(base.matrix, other.matrix);
  EXPECT_EQ(log_to_csv(base), log_to_csv(other));
}

TEST(Evaluate, MissingImagesAreSkippedAndClassMismatchRejected) {
  auto fx = dr_images("eval_skip", {2, 2, 2, 2, 2}, 78);
  std::filesystem::remove(fx.dir->path() / fx.images.filenames[3]);
  const auto pipeline = echo_pipeline(fx.images.truths, fx.images.filenames);
  const auto r = evaluate(pipeline, fx.dataset, fx.dir->path());
  EXPECT_EQ(r.matrix.total(), 9u);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0].first, fx.images.filenames[3]);

  LabeledDataset wrong = fx.dataset;
  wrong.class_set = dme_grade_classes();
  EXPECT_THROW(evaluate(pipeline, wrong, fx.dir->path()), ConfigError);
}

TEST(Golden, AllReferenceMatricesPass) {
  const auto report = golden_check();
  EXPECT_TRUE(report.all_pass());
  EXPECT_EQ(report.checks.size(), 4u);
  EXPECT_EQ(report.inconsistencies.size(), 2u);
  EXPECT_FALSE(golden_check(0.0).all_pass());  // 48/56 is 85.714..., not 85.7
  const auto text = format_golden(report);
  EXPECT_NE(text.find("PASS"), std::string::npos);
  EXPECT_EQ(text.find("FAIL"), std::string::npos);
}
