#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dataset.hpp"

namespace cobras {

double euclidean(std::span<const double> a, std::span<const double> b);
double squared_euclidean(std::span<const double> a, std::span<const double> b);

struct KMeansResult {
  std::vector<int> assignment;   // parallel to the input index list
  std::vector<double> centroids;  // k x d, row-major
  int k = 0;
  int iterations = 0;
  // Objective after each assignment step; non-increasing.
  std::vector<double> objective;
};

inline constexpr int kKMeansMaxIterations = 300;

/// Lloyd's algorithm from k-means++ seeding over the rows `points` of `ds`.
/// `k` is capped at the number of points. Empty clusters are repaired by
/// moving the point farthest from its centroid, so every cluster id in
/// 0..k-1 is used.
KMeansResult kmeans(const Dataset& ds, std::span<const Index> points, int k,
                    std::uint64_t seed);

/// Training member minimizing the summed distance to the other training
/// members; ties go to the lowest index.
Index medoid(const Dataset& ds, std::span<const Index> instances,
             const std::vector<bool>& train_mask);

}  // namespace cobras
