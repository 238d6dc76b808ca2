#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "engine.hpp"

namespace cobras {

/// Adjusted Rand index from the contingency table. Two single-cluster
/// partitions, or two all-singleton partitions, score 1.
double ari(const std::vector<int>& a, const std::vector<int>& b);

// ARI restricted to the instances flagged in `test_mask`, against ds labels.
double ari_on_test(const std::vector<int>& assignment, const Dataset& ds,
                   const std::vector<bool>& test_mask);

/// Aligned ranks of `scores[algorithm][task]`: per task subtract the mean over
/// algorithms, rank all differences jointly (largest = 1, ties averaged) and
/// average each algorithm's ranks.
std::vector<double> aligned_ranks(const std::vector<std::vector<double>>& scores);

/// COBRA with a fixed number of super-instances: one K-means over the data,
/// then merging until every cluster pair is related. Saturates afterwards.
class CobraBaseline final : public ActiveClusterer {
 public:
  CobraBaseline(std::shared_ptr<const Dataset> ds, std::size_t n_super, EngineOptions options);

 protected:
  std::optional<std::pair<Index, Index>> step() override;
  void resolve(Answer a) override;
  QueryPhase phase() const override { return QueryPhase::Merge; }
  bool commit_continuously() const override { return !merge_.finished(); }
  bool working_state_changed() override;

 private:
  CobraMerge merge_;
};

RunResult cobra_baseline(std::shared_ptr<const Dataset> ds, std::size_t n_super, Oracle& oracle,
                         EngineOptions options);

struct AlgorithmSpec {
  enum class Kind { Cobras, Cobra };
  Kind kind = Kind::Cobras;
  std::size_t n_super = 0;

  // "cobras" or "cobra:<N_S>"
  static AlgorithmSpec parse(const std::string& text);
  std::string name() const;
};

std::unique_ptr<ActiveClusterer> make_clusterer(const AlgorithmSpec& spec,
                                                std::shared_ptr<const Dataset> ds,
                                                EngineOptions options);

struct BenchmarkTask {
  std::string name;
  std::shared_ptr<const Dataset> data;
};

struct BenchmarkOptions {
  std::size_t budget = 100;
  std::uint64_t seed = 0;
  int repetitions = 10;
  int folds = 10;
  unsigned threads = 1;  // 0 = hardware concurrency
};

struct BenchmarkCell {
  std::size_t task = 0;
  std::size_t algorithm = 0;
  int repetition = 0;
  int fold = 0;
  std::vector<double> curve;  // test ARI at query counts 0..budget
  std::optional<std::string> error;
};

struct BenchmarkResult {
  std::vector<std::string> tasks;
  std::vector<std::string> algorithms;
  BenchmarkOptions options;
  // ordered by (task, repetition, fold, algorithm)
  std::vector<BenchmarkCell> cells;

  // Mean over successful cells; empty if none succeeded.
  std::vector<double> mean_curve(std::size_t task, std::size_t algorithm) const;
  // Aligned rank per algorithm at one query count, over tasks where every
  // algorithm has a mean curve.
  std::vector<double> aligned_ranks_at(std::size_t query_count) const;
  std::size_t failures() const;

  std::string to_csv() const;
  std::string to_json() const;
};

/// Repeated stratified cross-validation. Every algorithm clusters the full
/// dataset, may only query training pairs, and is scored on the test fold
/// after every answered query; saturated runs carry their last score forward.
BenchmarkResult run_benchmark(const std::vector<BenchmarkTask>& tasks,
                              const std::vector<AlgorithmSpec>& algorithms,
                              const BenchmarkOptions& options);

}  // namespace cobras
