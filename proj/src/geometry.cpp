#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "error.hpp"
#include "rng.hpp"

namespace cobras {

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::InvalidArgument, "dimension mismatch in distance");
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double diff = a[c] - b[c];
    s += diff * diff;
  }
  return s;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_euclidean(a, b));
}

namespace {

std::span<const double> centroid_row(const std::vector<double>& c, int j, std::size_t d) {
  return {c.data() + static_cast<std::size_t>(j) * d, d};
}

std::vector<double> kmeanspp_seed(const Dataset& ds, std::span<const Index> points, int k,
                                  std::mt19937_64& rng) {
  const std::size_t m = points.size();
  const std::size_t d = ds.dim();
  std::vector<double> centroids;
  centroids.reserve(static_cast<std::size_t>(k) * d);
  std::vector<bool> chosen(m, false);

  auto take = [&](std::size_t p) {
    chosen[p] = true;
    auto r = ds.row(points[p]);
    centroids.insert(centroids.end(), r.begin(), r.end());
  };
  take(static_cast<std::size_t>(rng() % m));

  std::vector<double> dist2(m);
  for (std::size_t p = 0; p < m; ++p)
    dist2[p] = squared_euclidean(ds.row(points[p]), centroid_row(centroids, 0, d));

  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : dist2) total += v;
    std::size_t pick = m;
    if (total > 0.0) {
      const double target = unit_interval(rng()) * total;
      double acc = 0.0;
      for (std::size_t p = 0; p < m; ++p) {
        acc += dist2[p];
        if (dist2[p] > 0.0 && acc > target) {
          pick = p;
          break;
        }
      }
      if (pick == m)  // rounding at the upper end
        for (std::size_t p = m; p-- > 0;)
          if (dist2[p] > 0.0) {
            pick = p;
            break;
          }
    } else {
      // Every remaining point coincides with a center.
      for (std::size_t p = 0; p < m; ++p)
        if (!chosen[p]) {
          pick = p;
          break;
        }
    }
    take(pick);
    auto newest = centroid_row(centroids, c, d);
    for (std::size_t p = 0; p < m; ++p)
      dist2[p] = std::min(dist2[p], squared_euclidean(ds.row(points[p]), newest));
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans(const Dataset& ds, std::span<const Index> points, int k,
                    std::uint64_t seed) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "kmeans on empty input");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "kmeans requires k >= 1");
  const std::size_t m = points.size();
  const std::size_t d = ds.dim();
  k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k), m));

  std::mt19937_64 rng(seed);
  KMeansResult res;
  res.k = k;
  res.centroids = kmeanspp_seed(ds, points, k, rng);
  res.assignment.assign(m, -1);

  std::vector<double> dist2(m);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k));
  for (int iter = 0; iter < kKMeansMaxIterations; ++iter) {
    bool changed = false;
    for (std::size_t p = 0; p < m; ++p) {
      auto x = ds.row(points[p]);
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        const double dj = squared_euclidean(x, centroid_row(res.centroids, j, d));
        if (dj < best_d) {
          best_d = dj;
          best = j;
        }
      }
      dist2[p] = best_d;
      if (res.assignment[p] != best) {
        res.assignment[p] = best;
        changed = true;
      }
    }

    std::fill(counts.begin(), counts.end(), 0);
    for (int a : res.assignment) ++counts[static_cast<std::size_t>(a)];
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) continue;
      // Repair: the farthest point from a multi-member cluster seeds cluster j.
      std::size_t far = m;
      for (std::size_t p = 0; p < m; ++p) {
        if (counts[static_cast<std::size_t>(res.assignment[p])] < 2) continue;
        if (far == m || dist2[p] > dist2[far]) far = p;
      }
      --counts[static_cast<std::size_t>(res.assignment[far])];
      res.assignment[far] = j;
      counts[static_cast<std::size_t>(j)] = 1;
      dist2[far] = 0.0;
      auto r = ds.row(points[far]);
      std::copy(r.begin(), r.end(), res.centroids.begin() + static_cast<std::ptrdiff_t>(j * d));
      changed = true;
    }

    double objective = 0.0;
    for (double v : dist2) objective += v;
    res.objective.push_back(objective);
    res.iterations = iter + 1;
    if (!changed) break;

    std::fill(res.centroids.begin(), res.centroids.end(), 0.0);
    for (std::size_t p = 0; p < m; ++p) {
      auto x = ds.row(points[p]);
      double* c = res.centroids.data() + static_cast<std::size_t>(res.assignment[p]) * d;
      for (std::size_t f = 0; f < d; ++f) c[f] += x[f];
    }
    for (int j = 0; j < k; ++j) {
      double* c = res.centroids.data() + static_cast<std::size_t>(j) * d;
      const double inv = 1.0 / static_cast<double>(counts[static_cast<std::size_t>(j)]);
      for (std::size_t f = 0; f < d; ++f) c[f] *= inv;
    }
  }
  return res;
}

Index medoid(const Dataset& ds, std::span<const Index> instances,
             const std::vector<bool>& train_mask) {
  std::vector<Index> train;
  for (Index i : instances)
    if (train_mask.empty() || train_mask.at(i)) train.push_back(i);
  if (train.empty())
    throw Error(ErrorCode::InvalidArgument, "medoid of a set without training instances");
  std::sort(train.begin(), train.end());

  std::vector<double> sums(train.size(), 0.0);
  for (std::size_t a = 0; a < train.size(); ++a) {
    auto ra = ds.row(train[a]);
    for (std::size_t b = a + 1; b < train.size(); ++b) {
      const double dist = euclidean(ra, ds.row(train[b]));
      sums[a] += dist;
      sums[b] += dist;
    }
  }
  std::size_t best = 0;
  for (std::size_t a = 1; a < train.size(); ++a)
    if (sums[a] < sums[best]) best = a;
  return train[best];
}

}  // namespace cobras
