#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "error.hpp"
#include "geometry.hpp"
#include "support.hpp"

using namespace cobras;

TEST(Euclidean, Examples) {
  std::vector<double> a{0, 0}, b{3, 4};
  EXPECT_DOUBLE_EQ(euclidean(a, b), 5.0);
  EXPECT_EQ(euclidean(b, b), 0.0);
  std::vector<double> c{1, 2, 3};
  EXPECT_THROW(euclidean(a, c), Error);
}

TEST(Euclidean, MatchesNaiveLoop) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> a(7), b(7);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    double s = 0;
    for (int k = 0; k < 7; ++k) s += std::pow(a[k] - b[k], 2);
    EXPECT_NEAR(euclidean(a, b), std::sqrt(s), 1e-12);
    EXPECT_EQ(euclidean(a, b), euclidean(b, a));
  }
}

TEST(KMeans, SingleClusterCentroidIsMean) {
  Dataset ds({0, 0, 2, 0, 4, 6}, 2);
  std::vector<Index> idx{0, 1, 2};
  auto r = kmeans(ds, idx, 1, 3);
  EXPECT_EQ(r.assignment, (std::vector<int>{0, 0, 0}));
  EXPECT_DOUBLE_EQ(r.centroids[0], 2.0);
  EXPECT_DOUBLE_EQ(r.centroids[1], 2.0);
}

TEST(KMeans, TwoBlobsRecovered) {
  Dataset ds = fixtures::make_blobs({{0.1, 0.1, 0.02, 40}, {0.9, 0.9, 0.02, 40}}, 4);
  ASSERT_TRUE(fixtures::nearest_centroid_separable(ds));
  std::vector<Index> idx(ds.size());
  std::iota(idx.begin(), idx.end(), Index{0});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto r = kmeans(ds, idx, 2, seed);
    for (Index i = 0; i < ds.size(); ++i)
      EXPECT_EQ(r.assignment[i] == r.assignment[0], ds.label(i) == ds.label(0));
  }
}

TEST(KMeans, KEqualsPointsAndCap) {
  Dataset ds({0, 1, 5, 9}, 1);
  std::vector<Index> idx{0, 1, 2, 3};
  for (int k : {4, 10}) {
    auto r = kmeans(ds, idx, k, 2);
    EXPECT_EQ(r.k, 4);
    std::set<int> ids(r.assignment.begin(), r.assignment.end());
    EXPECT_EQ(ids.size(), 4u);
  }
}

TEST(KMeans, EmptyClusterRepairWithDuplicates) {
  // Three distinct locations, k=5: repair must still use every id.
  Dataset ds({0, 0, 0, 1, 1, 2, 2, 2}, 1);
  std::vector<Index> idx(8);
  std::iota(idx.begin(), idx.end(), Index{0});
  auto r = kmeans(ds, idx, 5, 7);
  std::set<int> ids(r.assignment.begin(), r.assignment.end());
  EXPECT_EQ(ids.size(), 5u);
}

TEST(KMeans, ObjectiveNonIncreasingAndDeterministic) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> v(2 * 200);
    for (auto& x : v) x = u(rng);
    Dataset ds(v, 2);
    std::vector<Index> idx(200);
    std::iota(idx.begin(), idx.end(), Index{0});
    const int k = 2 + trial % 7;
    auto r = kmeans(ds, idx, k, static_cast<std::uint64_t>(trial));
    for (std::size_t t = 1; t < r.objective.size(); ++t)
      EXPECT_LE(r.objective[t], r.objective[t - 1] * (1 + 1e-12) + 1e-15);
    auto again = kmeans(ds, idx, k, static_cast<std::uint64_t>(trial));
    EXPECT_EQ(r.assignment, again.assignment);
    std::set<int> ids(r.assignment.begin(), r.assignment.end());
    EXPECT_EQ(static_cast<int>(ids.size()), k);
  }
}

TEST(KMeans, RejectsBadInput) {
  Dataset ds({0, 1}, 1);
  std::vector<Index> none;
  std::vector<Index> two{0, 1};
  EXPECT_THROW(kmeans(ds, none, 1, 0), Error);
  EXPECT_THROW(kmeans(ds, two, 0, 0), Error);
}

TEST(Medoid, Examples) {
  Dataset line({0, 1, 10}, 1);
  std::vector<Index> all{0, 1, 2};
  // distance sums: 0 -> 11, 1 -> 10, 10 -> 19
  EXPECT_EQ(medoid(line, all, {}), 1u);
  std::vector<Index> single{2};
  EXPECT_EQ(medoid(line, single, {}), 2u);
  Dataset pair({0, 4}, 1);
  std::vector<Index> both{1, 0};
  EXPECT_EQ(medoid(pair, both, {}), 0u);
}

TEST(Medoid, TrainOnlyAndEnumerationOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(3 * 40);
  for (auto& x : v) x = u(rng);
  Dataset ds(v, 3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<bool> train(40);
    std::vector<Index> members;
    for (Index i = 0; i < 40; ++i) {
      train[i] = rng() % 3 != 0;
      if (rng() % 2) members.push_back(i);
    }
    std::vector<Index> train_members;
    for (Index m : members)
      if (train[m]) train_members.push_back(m);
    if (train_members.empty()) {
      EXPECT_THROW(medoid(ds, members, train), Error);
      continue;
    }
    Index best = train_members[0];
    double best_sum = 1e300;
    for (Index a : train_members) {
      double s = 0;
      for (Index b : train_members) s += euclidean(ds.row(a), ds.row(b));
      if (s < best_sum - 1e-12) {
        best_sum = s;
        best = a;
      }
    }
    Index got = medoid(ds, members, train);
    EXPECT_TRUE(train[got]);
    EXPECT_EQ(got, best);
  }
}
