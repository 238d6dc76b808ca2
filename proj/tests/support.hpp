#pragma once

// Test-only generators and independent oracles. Nothing here calls into the
// code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "constraints.hpp"
#include "dataset.hpp"

namespace cobras::fixtures {

struct BlobSpec {
  double cx, cy, sigma;
  int count;
};

// Isotropic 2-D Gaussian blobs; label = blob index.
inline Dataset make_blobs(const std::vector<BlobSpec>& blobs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values;
  std::vector<int> labels;
  for (std::size_t b = 0; b < blobs.size(); ++b)
    for (int k = 0; k < blobs[b].count; ++k) {
      values.push_back(blobs[b].cx + blobs[b].sigma * normal(rng));
      values.push_back(blobs[b].cy + blobs[b].sigma * normal(rng));
      labels.push_back(static_cast<int>(b));
    }
  return Dataset(std::move(values), 2, std::move(labels));
}

// Three well-separated blobs of 50 points each.
inline Dataset three_blobs(std::uint64_t seed = 11) {
  return make_blobs({{0.2, 0.2, 0.03, 50}, {0.8, 0.25, 0.03, 50}, {0.5, 0.8, 0.03, 50}}, seed);
}

// True when every point is strictly closer to its own class centroid than
// to any other class centroid.
inline bool nearest_centroid_separable(const Dataset& ds) {
  std::map<int, std::vector<double>> sum;
  std::map<int, int> count;
  for (Index i = 0; i < ds.size(); ++i) {
    auto& s = sum[ds.label(i)];
    s.resize(ds.dim(), 0.0);
    for (std::size_t c = 0; c < ds.dim(); ++c) s[c] += ds.row(i)[c];
    ++count[ds.label(i)];
  }
  for (auto& [l, s] : sum)
    for (double& v : s) v /= count[l];
  for (Index i = 0; i < ds.size(); ++i) {
    double own = 0.0;
    std::map<int, double> d2;
    for (auto& [l, s] : sum) {
      double acc = 0.0;
      for (std::size_t c = 0; c < ds.dim(); ++c) acc += (ds.row(i)[c] - s[c]) * (ds.row(i)[c] - s[c]);
      d2[l] = acc;
    }
    own = d2[ds.label(i)];
    for (auto& [l, v] : d2)
      if (l != ds.label(i) && v <= own) return false;
  }
  return true;
}

// Pair-counting ARI over all C(m,2) pairs.
inline double brute_force_ari(const std::vector<int>& a, const std::vector<int>& b) {
  double n11 = 0, n00 = 0, n10 = 0, n01 = 0;
  for (std::size_t x = 0; x < a.size(); ++x)
    for (std::size_t y = x + 1; y < a.size(); ++y) {
      const bool sa = a[x] == a[y];
      const bool sb = b[x] == b[y];
      if (sa && sb) ++n11;
      else if (!sa && !sb) ++n00;
      else if (sa) ++n10;
      else ++n01;
    }
  const double denom = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
  if (denom == 0.0) return 1.0;
  return 2.0 * (n00 * n11 - n01 * n10) / denom;
}

// Entailment by graph search: ML edges give connected components; CL holds
// between i and j when some answered CL pair joins their components.
class ClosureOracle {
 public:
  explicit ClosureOracle(std::size_t n) : n_(n) {}
  void add_ml(std::size_t a, std::size_t b) { ml_.push_back({a, b}); }
  void add_cl(std::size_t a, std::size_t b) { cl_.push_back({a, b}); }

  std::vector<std::size_t> component_of() const {
    std::vector<std::size_t> comp(n_, n_);
    std::size_t next = 0;
    for (std::size_t s = 0; s < n_; ++s) {
      if (comp[s] != n_) continue;
      std::vector<std::size_t> stack{s};
      comp[s] = next;
      while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        for (auto [a, b] : ml_)
          for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}})
            if (x == u && comp[y] == n_) {
              comp[y] = next;
              stack.push_back(y);
            }
      }
      ++next;
    }
    return comp;
  }
  // 0 unknown, 1 must-link, 2 cannot-link
  int relation(std::size_t i, std::size_t j) const {
    auto comp = component_of();
    if (comp[i] == comp[j]) return 1;
    for (auto [a, b] : cl_)
      if ((comp[a] == comp[i] && comp[b] == comp[j]) || (comp[a] == comp[j] && comp[b] == comp[i]))
        return 2;
    return 0;
  }

 private:
  std::size_t n_;
  std::vector<std::pair<std::size_t, std::size_t>> ml_, cl_;
};

// Replays answered pairs in order and reports the first one whose relation
// was already entailed (or already skipped) when it was asked; -1 if none.
template <class Entries>
long first_redundant_query(std::size_t n, const Entries& transcript) {
  ClosureOracle closure(n);
  std::set<std::pair<std::size_t, std::size_t>> skipped;
  long at = 0;
  for (const auto& e : transcript) {
    auto key = std::minmax(e.i, e.j);
    if (e.i == e.j || closure.relation(e.i, e.j) != 0 || skipped.contains(key)) return at;
    switch (e.answer) {
      case Answer::MustLink: closure.add_ml(e.i, e.j); break;
      case Answer::CannotLink: closure.add_cl(e.i, e.j); break;
      case Answer::DontKnow: skipped.insert(key); break;
    }
    ++at;
  }
  return -1;
}

// Medoids within one cluster must be must-linked; every two clusters need a
// cannot-linked medoid pair.
template <class Entries>
bool merge_sound(std::size_t n, const Entries& transcript,
                 const std::vector<std::vector<Index>>& cluster_medoids) {
  ClosureOracle closure(n);
  for (const auto& e : transcript) {
    if (e.answer == Answer::MustLink) closure.add_ml(e.i, e.j);
    if (e.answer == Answer::CannotLink) closure.add_cl(e.i, e.j);
  }
  auto comp = closure.component_of();
  for (const auto& c : cluster_medoids)
    for (Index m : c)
      if (comp[m] != comp[c.front()]) return false;
  for (std::size_t a = 0; a < cluster_medoids.size(); ++a)
    for (std::size_t b = a + 1; b < cluster_medoids.size(); ++b)
      if (closure.relation(cluster_medoids[a].front(), cluster_medoids[b].front()) != 2)
        return false;
  return true;
}

inline std::shared_ptr<const Dataset> share(Dataset ds) {
  return std::make_shared<const Dataset>(std::move(ds));
}

}  // namespace cobras::fixtures
