#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "error.hpp"
#include "evaluation.hpp"
#include "support.hpp"

using namespace cobras;

namespace {

std::vector<int> random_partition(std::mt19937_64& rng, std::size_t m) {
  const int k = 1 + static_cast<int>(rng() % m);
  std::vector<int> p(m);
  for (auto& x : p) x = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
  return p;
}

// 1 + (number strictly better) + half the number tied, over all entries
std::vector<double> ranks_by_counting(const std::vector<std::vector<double>>& scores) {
  const std::size_t k = scores.size(), n = scores[0].size();
  std::vector<double> diffs;
  std::vector<std::size_t> owner;
  for (std::size_t t = 0; t < n; ++t) {
    double mean = 0;
    for (std::size_t a = 0; a < k; ++a) mean += scores[a][t] / static_cast<double>(k);
    for (std::size_t a = 0; a < k; ++a) {
      diffs.push_back(scores[a][t] - mean);
      owner.push_back(a);
    }
  }
  std::vector<double> out(k, 0.0);
  for (std::size_t e = 0; e < diffs.size(); ++e) {
    double better = 0, tied = 0;
    for (std::size_t o = 0; o < diffs.size(); ++o) {
      if (o == e) continue;
      if (std::abs(diffs[o] - diffs[e]) <= 1e-12)
        ++tied;
      else if (diffs[o] > diffs[e])
        ++better;
    }
    out[owner[e]] += (1 + better + tied / 2) / static_cast<double>(n);
  }
  return out;
}

}  // namespace

TEST(Ari, Examples) {
  EXPECT_DOUBLE_EQ(ari({1, 1, 2, 2}, {1, 2, 1, 2}), -0.5);
  EXPECT_DOUBLE_EQ(ari({0, 0, 1, 1}, {5, 5, 3, 3}), 1.0);
  EXPECT_DOUBLE_EQ(ari({0, 0, 0}, {1, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(ari({0, 1, 2}, {0, 1, 2}), 1.0);
  EXPECT_DOUBLE_EQ(ari({0, 0, 0, 0}, {0, 1, 2, 3}), 0.0);
  EXPECT_THROW(ari({0}, {0, 1}), Error);
}

TEST(Ari, MatchesPairCounting) {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t m = 2 + rng() % 11;
    auto a = random_partition(rng, m);
    auto b = random_partition(rng, m);
    EXPECT_NEAR(ari(a, b), fixtures::brute_force_ari(a, b), 1e-12);
    EXPECT_NEAR(ari(a, b), ari(b, a), 1e-12);
  }
}

TEST(Ari, InvariantUnderRelabeling) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    auto a = random_partition(rng, 20);
    auto b = random_partition(rng, 20);
    auto relabeled = a;
    for (auto& x : relabeled) x = 100 - 3 * x;
    EXPECT_NEAR(ari(a, b), ari(relabeled, b), 1e-12);
  }
}

TEST(AriOnTest, RestrictsToMask) {
  Dataset ds({0, 1, 2, 3, 4, 5}, 1, std::vector<int>{0, 0, 1, 1, 2, 2});
  // wrong on instances 1 and 4, which are masked out
  std::vector<int> pred{0, 7, 1, 1, 0, 2};
  EXPECT_DOUBLE_EQ(ari_on_test(pred, ds, {true, false, true, true, false, true}), 1.0);
  EXPECT_LT(ari_on_test(pred, ds, std::vector<bool>(6, true)), 1.0);
  EXPECT_THROW(ari_on_test(pred, ds, std::vector<bool>(6, false)), Error);
}

TEST(AriOnTest, RandomAssignmentsAverageNearZero) {
  std::mt19937_64 rng(1);
  std::vector<int> labels(60);
  for (std::size_t i = 0; i < 60; ++i) labels[i] = static_cast<int>(i % 3);
  Dataset ds(std::vector<double>(60, 0.0), 1, labels);
  std::vector<bool> mask(60);
  for (std::size_t i = 0; i < 60; ++i) mask[i] = i % 2 == 0;
  double sum = 0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t) {
    std::vector<int> pred(60);
    for (auto& p : pred) p = static_cast<int>(rng() % 3);
    sum += ari_on_test(pred, ds, mask);
  }
  EXPECT_NEAR(sum / trials, 0.0, 0.05);
}

TEST(AlignedRanks, Examples) {
  auto tied = aligned_ranks({{0.5, 0.1, 0.9}, {0.5, 0.1, 0.9}});
  // k=2 algorithms over n=3 tasks, all tied: (k*n + 1) / 2
  EXPECT_DOUBLE_EQ(tied[0], 3.5);
  EXPECT_DOUBLE_EQ(tied[1], 3.5);
  auto one = aligned_ranks({{0.8}, {0.2}});
  EXPECT_DOUBLE_EQ(one[0], 1.0);
  EXPECT_DOUBLE_EQ(one[1], 2.0);
  EXPECT_THROW(aligned_ranks({{0.1, 0.2}, {0.3}}), Error);
}

TEST(AlignedRanks, MatchesCounting) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + rng() % 3, n = 1 + rng() % 4;
    std::vector<std::vector<double>> s(k, std::vector<double>(n));
    for (auto& row : s)
      for (auto& v : row) v = static_cast<double>(rng() % 5) / 4.0;  // plenty of ties
    auto got = aligned_ranks(s);
    auto want = ranks_by_counting(s);
    double total = 0;
    for (std::size_t a = 0; a < k; ++a) {
      EXPECT_NEAR(got[a], want[a], 1e-12);
      total += got[a];
    }
    // ranks 1..kn sum to kn(kn+1)/2; averaged over n tasks
    const double kn = static_cast<double>(k * n);
    EXPECT_NEAR(total, kn * (kn + 1) / 2 / static_cast<double>(n), 1e-9);
  }
}

TEST(AlgorithmSpec, ParsesNames) {
  EXPECT_EQ(AlgorithmSpec::parse("cobras").kind, AlgorithmSpec::Kind::Cobras);
  auto c = AlgorithmSpec::parse("cobra:25");
  EXPECT_EQ(c.kind, AlgorithmSpec::Kind::Cobra);
  EXPECT_EQ(c.n_super, 25u);
  EXPECT_EQ(c.name(), "cobra:25");
  for (const char* bad : {"cobra:", "cobra:0", "cobra:x", "kmeans", "cobra:3a"})
    EXPECT_THROW(AlgorithmSpec::parse(bad), Error) << bad;
}

TEST(CobraBaseline, SingleSuperInstanceAsksNothing) {
  auto ds = fixtures::share(fixtures::three_blobs());
  LabelOracle oracle(*ds);
  auto r = cobra_baseline(ds, 1, oracle, {100, 0, {}});
  EXPECT_TRUE(r.transcript.empty());
  EXPECT_EQ(r.reason, EndReason::Saturated);
}

TEST(CobraBaseline, AllSingletonsRecoverLabels) {
  auto ds = fixtures::share(fixtures::make_blobs({{0, 0, 0.1, 5}, {1, 1, 0.1, 5}}, 3));
  LabelOracle oracle(*ds);
  auto r = cobra_baseline(ds, 10, oracle, {100, 0, {}});
  EXPECT_DOUBLE_EQ(ari(r.clustering.assignment, ds->labels()), 1.0);
  EXPECT_EQ(fixtures::first_redundant_query(10, r.transcript), -1);
  EXPECT_TRUE(fixtures::merge_sound(10, r.transcript, r.clustering.cluster_medoids));
  // n singletons: at most n-1 must-links plus one cannot-link per final cluster pair
  EXPECT_LE(r.transcript.size(), 45u);
}

TEST(Benchmark, ZeroBudgetCurveIsSingleClusterScore) {
  auto ds = fixtures::share(fixtures::three_blobs());
  BenchmarkOptions o;
  o.budget = 0;
  o.repetitions = 2;
  o.folds = 5;
  auto r = run_benchmark({{"blobs", ds}}, {AlgorithmSpec::parse("cobras")}, o);
  EXPECT_EQ(r.cells.size(), 10u);
  EXPECT_EQ(r.failures(), 0u);
  for (const auto& c : r.cells) EXPECT_EQ(c.curve, std::vector<double>{0.0});
}

TEST(Benchmark, SaturatedCurvesAreFlat) {
  auto ds = fixtures::share(fixtures::three_blobs());
  BenchmarkOptions o;
  o.budget = 150;
  o.repetitions = 1;
  o.folds = 3;
  auto r = run_benchmark({{"blobs", ds}}, {AlgorithmSpec::parse("cobra:5")}, o);
  for (const auto& c : r.cells) {
    ASSERT_EQ(c.curve.size(), 151u);
    // cobra:5 on 3 blobs needs at most C(5,2) queries
    for (std::size_t q = 10; q <= 150; ++q) EXPECT_EQ(c.curve[q], c.curve[10]);
  }
}

TEST(Benchmark, DeterministicAcrossThreadCounts) {
  auto ds = fixtures::share(fixtures::three_blobs(4));
  BenchmarkOptions o;
  o.budget = 20;
  o.repetitions = 2;
  o.folds = 3;
  o.seed = 77;
  std::vector<AlgorithmSpec> algs{AlgorithmSpec::parse("cobras"), AlgorithmSpec::parse("cobra:6")};
  auto a = run_benchmark({{"blobs", ds}}, algs, o);
  o.threads = 3;
  auto b = run_benchmark({{"blobs", ds}}, algs, o);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.to_json(), b.to_json());
  auto ranks = a.aligned_ranks_at(20);
  ASSERT_EQ(ranks.size(), 2u);
  EXPECT_DOUBLE_EQ(ranks[0] + ranks[1], 3.0);
}

TEST(Benchmark, FailingTaskIsReportedNotFatal) {
  auto good = fixtures::share(fixtures::three_blobs());
  auto unlabeled = fixtures::share(Dataset({0, 1, 2, 3}, 1));
  BenchmarkOptions o;
  o.budget = 5;
  o.repetitions = 1;
  o.folds = 2;
  auto r = run_benchmark({{"good", good}, {"bad", unlabeled}}, {AlgorithmSpec::parse("cobras")}, o);
  EXPECT_EQ(r.failures(), 2u);
  EXPECT_FALSE(r.mean_curve(0, 0).empty());
  EXPECT_TRUE(r.mean_curve(1, 0).empty());
  EXPECT_NE(r.to_json().find("\"failures\""), std::string::npos);
  EXPECT_EQ(r.to_csv().rfind("task,algorithm,repetition,fold,query_count,ari\n", 0), 0u);
  EXPECT_THROW(run_benchmark({}, {AlgorithmSpec::parse("cobras")}, o), Error);
}
