// Exercises the shared library through its C header only.
#include <gtest/gtest.h>

#include <cobras/cobras.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace {

struct Owned {
  char* s = nullptr;
  ~Owned() { cobras_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

cobras_dataset* iris() {
  cobras_dataset* raw = nullptr;
  EXPECT_EQ(cobras_dataset_load_csv(COBRAS_TEST_DATA "/iris.csv", nullptr, &raw), COBRAS_OK);
  cobras_dataset* dedup = nullptr;
  EXPECT_EQ(cobras_dataset_deduplicate(raw, &dedup), COBRAS_OK);
  cobras_dataset* norm = nullptr;
  EXPECT_EQ(cobras_dataset_normalize(dedup, &norm), COBRAS_OK);
  cobras_dataset_free(raw);
  cobras_dataset_free(dedup);
  return norm;
}

}  // namespace

TEST(CApi, VersionAndStatusStrings) {
  EXPECT_STREQ(cobras_version(), "1.0.0");
  EXPECT_STREQ(cobras_status_string(COBRAS_OK), "ok");
  EXPECT_STREQ(cobras_status_string(COBRAS_ERR_STATE), "invalid state");
}

TEST(CApi, DatasetLoading) {
  cobras_dataset* ds = iris();
  ASSERT_NE(ds, nullptr);
  EXPECT_EQ(cobras_dataset_size(ds), 149u);
  EXPECT_EQ(cobras_dataset_dim(ds), 4u);
  EXPECT_EQ(cobras_dataset_has_labels(ds), 1);
  std::vector<double> row(4);
  ASSERT_EQ(cobras_dataset_row(ds, 0, row.data(), row.size()), COBRAS_OK);
  for (double v : row) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(cobras_dataset_row(ds, 0, row.data(), 2), COBRAS_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(cobras_dataset_row(ds, 149, row.data(), 4), COBRAS_ERR_INVALID_ARGUMENT);
  std::vector<double> proj(2 * 149);
  EXPECT_EQ(cobras_dataset_projection(ds, proj.data(), proj.size()), COBRAS_OK);
  std::vector<int> folds(2 * 149);
  EXPECT_EQ(cobras_dataset_make_folds(ds, 2, 10, 3, folds.data(), folds.size()), COBRAS_OK);
  cobras_dataset_free(ds);
}

TEST(CApi, ErrorsCarryMessages) {
  cobras_dataset* ds = nullptr;
  EXPECT_EQ(cobras_dataset_load_csv("/nonexistent/file.csv", nullptr, &ds), COBRAS_ERR_IO);
  EXPECT_NE(std::string(cobras_last_error()).find("/nonexistent/file.csv"), std::string::npos);
  auto bad = std::filesystem::temp_directory_path() / "cobras_capi_bad.csv";
  std::ofstream(bad) << "a,b\n1,x\n";
  EXPECT_EQ(cobras_dataset_load_csv(bad.c_str(), nullptr, &ds), COBRAS_ERR_PARSE);
  EXPECT_NE(std::string(cobras_last_error()).find(":2"), std::string::npos);
  EXPECT_EQ(cobras_dataset_load_csv(nullptr, nullptr, &ds), COBRAS_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(cobras_session_advance(nullptr, nullptr), COBRAS_ERR_INVALID_ARGUMENT);
}

TEST(CApi, AriAndRanks) {
  const int a[] = {1, 1, 2, 2}, b[] = {1, 2, 1, 2};
  double v = 0;
  ASSERT_EQ(cobras_ari(a, b, 4, &v), COBRAS_OK);
  EXPECT_DOUBLE_EQ(v, -0.5);
  const double scores[] = {0.8, 0.2};
  double ranks[2];
  ASSERT_EQ(cobras_aligned_ranks(scores, 2, 1, ranks, 2), COBRAS_OK);
  EXPECT_DOUBLE_EQ(ranks[0], 1.0);
  EXPECT_DOUBLE_EQ(ranks[1], 2.0);
}

TEST(CApi, InteractiveSessionAndReplay) {
  cobras_dataset* ds = iris();
  cobras_session_options opt{};
  opt.budget = 20;
  opt.seed = 8;
  opt.dataset_path = "iris.csv";
  cobras_session* s = nullptr;
  ASSERT_EQ(cobras_session_create(ds, &opt, &s), COBRAS_OK);
  EXPECT_EQ(cobras_session_commit_count(s), 1u);
  cobras_step step{};
  for (;;) {
    ASSERT_EQ(cobras_session_advance(s, &step), COBRAS_OK);
    if (step.kind == COBRAS_STEP_DONE) break;
    EXPECT_EQ(cobras_session_answer(s, step.qnum + 1, COBRAS_MUST_LINK), COBRAS_ERR_STATE);
    cobras_answer a;
    ASSERT_EQ(cobras_session_label_answer(s, step.i, step.j, &a), COBRAS_OK);
    ASSERT_EQ(cobras_session_answer(s, step.qnum, a), COBRAS_OK);
  }
  EXPECT_EQ(step.reason, COBRAS_END_BUDGET);
  EXPECT_EQ(cobras_session_answered(s), 20u);

  Owned trace, csv;
  ASSERT_EQ(cobras_session_trace(s, &trace.s), COBRAS_OK);
  ASSERT_EQ(cobras_session_assignments_csv(s, &csv.s), COBRAS_OK);
  EXPECT_EQ(csv.str().rfind("instance_id,cluster_id\n0,", 0), 0u);

  Owned path, label;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  ASSERT_EQ(cobras_trace_header(trace.s, &path.s, &label.s, &seed, &budget), COBRAS_OK);
  EXPECT_EQ(path.str(), "iris.csv");
  EXPECT_EQ(label.s, nullptr);
  EXPECT_EQ(seed, 8u);
  EXPECT_EQ(budget, 20u);

  cobras_session* r = nullptr;
  ASSERT_EQ(cobras_session_replay(ds, trace.s, &r), COBRAS_OK);
  Owned csv2;
  ASSERT_EQ(cobras_session_assignments_csv(r, &csv2.s), COBRAS_OK);
  EXPECT_EQ(csv.str(), csv2.str());
  cobras_session_free(r);

  ASSERT_EQ(cobras_session_replay(ds, "{}", &r), COBRAS_ERR_PARSE);
  cobras_session_free(s);
  cobras_dataset_free(ds);
}

TEST(CApi, TrainMaskGuardsOracle) {
  const double values[] = {0, 1, 2, 3};
  const int labels[] = {0, 0, 1, 1};
  cobras_dataset* ds = nullptr;
  ASSERT_EQ(cobras_dataset_create(values, 4, 1, labels, &ds), COBRAS_OK);
  const unsigned char mask[] = {1, 1, 1, 0};
  cobras_session_options opt{};
  opt.budget = 10;
  opt.train_mask = mask;
  cobras_session* s = nullptr;
  ASSERT_EQ(cobras_session_create(ds, &opt, &s), COBRAS_OK);
  cobras_answer a;
  EXPECT_EQ(cobras_session_label_answer(s, 0, 3, &a), COBRAS_ERR_ORACLE);
  cobras_step step{};
  ASSERT_EQ(cobras_session_run_labels(s, &step), COBRAS_OK);
  EXPECT_EQ(step.kind, COBRAS_STEP_DONE);
  std::vector<int> out(4);
  std::size_t qc = 0;
  ASSERT_EQ(cobras_session_snapshot(s, out.data(), out.size(), &qc), COBRAS_OK);
  EXPECT_EQ(out[0], out[1]);
  EXPECT_NE(out[1], out[2]);
  cobras_session_free(s);
  cobras_dataset_free(ds);
}

TEST(CApi, Benchmark) {
  cobras_dataset* ds = iris();
  cobras_benchmark* b = nullptr;
  ASSERT_EQ(cobras_benchmark_create(&b), COBRAS_OK);
  double curve[11];
  EXPECT_EQ(cobras_benchmark_mean_curve(b, 0, 0, curve, 11), COBRAS_ERR_STATE);
  ASSERT_EQ(cobras_benchmark_add_task(b, "iris", ds), COBRAS_OK);
  ASSERT_EQ(cobras_benchmark_add_algorithm(b, "cobras"), COBRAS_OK);
  ASSERT_EQ(cobras_benchmark_add_algorithm(b, "cobra:8"), COBRAS_OK);
  EXPECT_EQ(cobras_benchmark_add_algorithm(b, "nope"), COBRAS_ERR_INVALID_ARGUMENT);
  cobras_benchmark_options opt{10, 1, 1, 5, 1};
  ASSERT_EQ(cobras_benchmark_run(b, &opt), COBRAS_OK);
  EXPECT_EQ(cobras_benchmark_cells(b), 10u);
  EXPECT_EQ(cobras_benchmark_failures(b), 0u);
  ASSERT_EQ(cobras_benchmark_mean_curve(b, 0, 0, curve, 11), COBRAS_OK);
  double ranks[2];
  ASSERT_EQ(cobras_benchmark_aligned_ranks(b, 10, ranks, 2), COBRAS_OK);
  EXPECT_DOUBLE_EQ(ranks[0] + ranks[1], 3.0);
  Owned csv, json;
  ASSERT_EQ(cobras_benchmark_csv(b, &csv.s), COBRAS_OK);
  ASSERT_EQ(cobras_benchmark_json(b, &json.s), COBRAS_OK);
  EXPECT_NE(json.str().find("\"aligned_ranks\""), std::string::npos);
  cobras_benchmark_free(b);
  cobras_dataset_free(ds);
}
