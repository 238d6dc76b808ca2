#include "evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "error.hpp"

namespace cobras {

namespace {

// Mean-centred differences that agree up to rounding count as ties.
constexpr double kTieTolerance = 1e-12;

double comb2(double x) { return x * (x - 1.0) / 2.0; }

std::vector<int> compact(const std::vector<int>& labels) {
  std::map<int, int> ids;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[i] = ids.try_emplace(labels[i], static_cast<int>(ids.size())).first->second;
  return out;
}

}  // namespace

double ari(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::InvalidArgument, "ARI over partitions of different sizes");
  const std::size_t m = a.size();
  if (m < 2) return 1.0;
  const std::vector<int> ca = compact(a);
  const std::vector<int> cb = compact(b);
  const int ka = *std::max_element(ca.begin(), ca.end()) + 1;
  const int kb = *std::max_element(cb.begin(), cb.end()) + 1;

  std::vector<double> table(static_cast<std::size_t>(ka) * static_cast<std::size_t>(kb), 0.0);
  std::vector<double> rows(static_cast<std::size_t>(ka), 0.0);
  std::vector<double> cols(static_cast<std::size_t>(kb), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    table[static_cast<std::size_t>(ca[i]) * static_cast<std::size_t>(kb) +
          static_cast<std::size_t>(cb[i])] += 1.0;
    rows[static_cast<std::size_t>(ca[i])] += 1.0;
    cols[static_cast<std::size_t>(cb[i])] += 1.0;
  }
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (double v : table) index += comb2(v);
  for (double v : rows) sum_a += comb2(v);
  for (double v : cols) sum_b += comb2(v);
  const double total = comb2(static_cast<double>(m));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

double ari_on_test(const std::vector<int>& assignment, const Dataset& ds,
                   const std::vector<bool>& test_mask) {
  if (assignment.size() != ds.size() || test_mask.size() != ds.size())
    throw Error(ErrorCode::InvalidArgument, "assignment or mask size mismatch");
  std::vector<int> pred, truth;
  for (Index i = 0; i < ds.size(); ++i) {
    if (!test_mask[i]) continue;
    pred.push_back(assignment[i]);
    truth.push_back(ds.label(i));
  }
  if (pred.empty()) throw Error(ErrorCode::InvalidArgument, "empty test set");
  return ari(pred, truth);
}

std::vector<double> aligned_ranks(const std::vector<std::vector<double>>& scores) {
  if (scores.empty() || scores.front().empty())
    throw Error(ErrorCode::InvalidArgument, "aligned ranks of an empty score matrix");
  const std::size_t k = scores.size();
  const std::size_t n = scores.front().size();
  for (const auto& row : scores) {
    if (row.size() != n) throw Error(ErrorCode::InvalidArgument, "ragged score matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "missing score");
  }

  struct Entry {
    double diff;
    std::size_t algorithm;
  };
  std::vector<Entry> entries;
  for (std::size_t t = 0; t < n; ++t) {
    double mean = 0.0;
    for (std::size_t a = 0; a < k; ++a) mean += scores[a][t];
    mean /= static_cast<double>(k);
    for (std::size_t a = 0; a < k; ++a) entries.push_back({scores[a][t] - mean, a});
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& x, const Entry& y) { return x.diff > y.diff; });

  std::vector<double> rank_sum(k, 0.0);
  for (std::size_t lo = 0; lo < entries.size();) {
    std::size_t hi = lo;
    while (hi + 1 < entries.size() && entries[lo].diff - entries[hi + 1].diff <= kTieTolerance)
      ++hi;
    const double avg = (static_cast<double>(lo + 1) + static_cast<double>(hi + 1)) / 2.0;
    for (std::size_t e = lo; e <= hi; ++e) rank_sum[entries[e].algorithm] += avg;
    lo = hi + 1;
  }
  for (double& r : rank_sum) r /= static_cast<double>(n);
  return rank_sum;
}

// ---------------------------------------------------------------------------
// COBRA baseline

CobraBaseline::CobraBaseline(std::shared_ptr<const Dataset> ds, std::size_t n_super,
                             EngineOptions options)
    : ActiveClusterer(std::move(ds), std::move(options)) {
  if (n_super < 1) throw Error(ErrorCode::InvalidArgument, "N_S must be at least 1");
  std::vector<Index> all(ws_.ds.size());
  std::iota(all.begin(), all.end(), Index{0});
  for (auto& part : partition_with_train(ws_, all, n_super)) {
    const SuperInstanceId id =
        ws_.book.add_super_instance(ws_.ds, ws_.train, std::move(part), std::nullopt);
    ws_.book.add_cluster({id});
  }
  commit(ws_.book.clusters().size() == 1);
}

std::optional<std::pair<Index, Index>> CobraBaseline::step() {
  if (auto p = merge_.advance(ws_)) return p;
  merge_.clear_changed();
  commit(true);
  finish(EndReason::Saturated);
  return std::nullopt;
}

void CobraBaseline::resolve(Answer a) { merge_.resolve(ws_, a); }

bool CobraBaseline::working_state_changed() {
  const bool changed = merge_.changed();
  merge_.clear_changed();
  return changed;
}

RunResult cobra_baseline(std::shared_ptr<const Dataset> ds, std::size_t n_super, Oracle& oracle,
                         EngineOptions options) {
  CobraBaseline baseline(std::move(ds), n_super, std::move(options));
  return drive(baseline, oracle);
}

// ---------------------------------------------------------------------------
// Benchmark harness

AlgorithmSpec AlgorithmSpec::parse(const std::string& text) {
  if (text == "cobras") return {Kind::Cobras, 0};
  const std::string prefix = "cobra:";
  if (text.rfind(prefix, 0) == 0) {
    std::size_t n = 0;
    const char* first = text.data() + prefix.size();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, n);
    if (ec == std::errc() && ptr == last && n >= 1) return {Kind::Cobra, n};
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown algorithm '" + text + "' (expected cobras or cobra:<N_S>)");
}

std::string AlgorithmSpec::name() const {
  return kind == Kind::Cobras ? "cobras" : "cobra:" + std::to_string(n_super);
}

std::unique_ptr<ActiveClusterer> make_clusterer(const AlgorithmSpec& spec,
                                                std::shared_ptr<const Dataset> ds,
                                                EngineOptions options) {
  if (spec.kind == AlgorithmSpec::Kind::Cobras)
    return std::make_unique<CobrasEngine>(std::move(ds), std::move(options));
  return std::make_unique<CobraBaseline>(std::move(ds), spec.n_super, std::move(options));
}

namespace {

std::vector<double> score_curve(ActiveClusterer& clusterer, Oracle& oracle, const Dataset& ds,
                                const std::vector<bool>& test_mask, std::size_t budget) {
  std::vector<double> curve(budget + 1, 0.0);
  std::size_t scored_snapshots = 0;
  double current = 0.0;
  auto score_now = [&] {
    if (clusterer.snapshots().size() != scored_snapshots) {
      current = ari_on_test(clusterer.snapshot().assignment, ds, test_mask);
      scored_snapshots = clusterer.snapshots().size();
    }
    return current;
  };
  for (;;) {
    Step s = clusterer.advance();
    if (std::holds_alternative<Finished>(s)) {
      const double final_score = score_now();
      for (std::size_t c = clusterer.answered(); c <= budget; ++c) curve[c] = final_score;
      return curve;
    }
    const auto& q = std::get<PendingQuery>(s);
    curve[q.qnum - 1] = score_now();
    clusterer.answer(q.qnum, oracle.answer(q.i, q.j));
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

BenchmarkResult run_benchmark(const std::vector<BenchmarkTask>& tasks,
                              const std::vector<AlgorithmSpec>& algorithms,
                              const BenchmarkOptions& options) {
  if (tasks.empty()) throw Error(ErrorCode::InvalidArgument, "no benchmark tasks");
  if (algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "no benchmark algorithms");

  BenchmarkResult result;
  result.options = options;
  for (const auto& t : tasks) result.tasks.push_back(t.name);
  for (const auto& a : algorithms) result.algorithms.push_back(a.name());

  // Folds per task; a task that cannot be folded fails all of its cells.
  std::vector<std::vector<FoldAssignment>> folds(tasks.size());
  std::vector<std::optional<std::string>> task_error(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    try {
      if (!tasks[t].data) throw Error(ErrorCode::InvalidArgument, "task has no data");
      folds[t] = make_folds(*tasks[t].data, options.repetitions, options.folds,
                            derive_seed(options.seed, Stream::Folds, t));
    } catch (const std::exception& e) {
      task_error[t] = e.what();
    }
  }

  for (std::size_t t = 0; t < tasks.size(); ++t)
    for (int r = 0; r < options.repetitions; ++r)
      for (int f = 0; f < options.folds; ++f)
        for (std::size_t a = 0; a < algorithms.size(); ++a)
          result.cells.push_back(BenchmarkCell{t, a, r, f, {}, task_error[t]});

  auto run_cell = [&](BenchmarkCell& cell) {
    if (cell.error) return;
    try {
      const BenchmarkTask& task = tasks[cell.task];
      const FoldAssignment& fa = folds[cell.task][static_cast<std::size_t>(cell.repetition)];
      EngineOptions eo;
      eo.budget = options.budget;
      eo.train_mask = fa.train_mask(cell.fold);
      // Same seed for every algorithm within a (task, repetition, fold) cell.
      eo.seed = derive_seed(options.seed, Stream::Cell,
                            (cell.task * 1000003ULL + static_cast<std::uint64_t>(cell.repetition)) *
                                    1000003ULL +
                                static_cast<std::uint64_t>(cell.fold));
      LabelOracle oracle(*task.data, eo.train_mask);
      auto clusterer = make_clusterer(algorithms[cell.algorithm], task.data, eo);
      cell.curve = score_curve(*clusterer, oracle, *task.data, fa.test_mask(cell.fold),
                               options.budget);
    } catch (const std::exception& e) {
      cell.error = e.what();
      cell.curve.clear();
    }
  };

  unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                          : options.threads;
  if (threads <= 1) {
    for (auto& c : result.cells) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < result.cells.size(); i = next++) run_cell(result.cells[i]);
      });
    for (auto& th : pool) th.join();
  }
  return result;
}

std::vector<double> BenchmarkResult::mean_curve(std::size_t task, std::size_t algorithm) const {
  std::vector<double> sum;
  std::size_t count = 0;
  for (const auto& c : cells) {
    if (c.task != task || c.algorithm != algorithm || c.error) continue;
    if (sum.empty()) sum.assign(c.curve.size(), 0.0);
    for (std::size_t q = 0; q < c.curve.size(); ++q) sum[q] += c.curve[q];
    ++count;
  }
  for (double& v : sum) v /= static_cast<double>(count);
  return sum;
}

namespace {

using MeanTable = std::vector<std::vector<std::vector<double>>>;  // [task][algorithm]

MeanTable all_means(const BenchmarkResult& r) {
  MeanTable m(r.tasks.size());
  for (std::size_t t = 0; t < r.tasks.size(); ++t)
    for (std::size_t a = 0; a < r.algorithms.size(); ++a) m[t].push_back(r.mean_curve(t, a));
  return m;
}

std::vector<double> ranks_from_means(const MeanTable& means, std::size_t algorithms,
                                     std::size_t query_count) {
  std::vector<std::vector<double>> scores(algorithms);
  for (const auto& per_task : means) {
    bool complete = true;
    for (const auto& curve : per_task) complete = complete && curve.size() > query_count;
    if (!complete) continue;
    for (std::size_t a = 0; a < algorithms; ++a) scores[a].push_back(per_task[a][query_count]);
  }
  if (scores.empty() || scores.front().empty()) return {};
  return aligned_ranks(scores);
}

}  // namespace

std::vector<double> BenchmarkResult::aligned_ranks_at(std::size_t query_count) const {
  return ranks_from_means(all_means(*this), algorithms.size(), query_count);
}

std::size_t BenchmarkResult::failures() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.error.has_value(); }));
}

std::string BenchmarkResult::to_csv() const {
  std::ostringstream out;
  out << "task,algorithm,repetition,fold,query_count,ari\n";
  for (const auto& c : cells) {
    if (c.error) continue;
    for (std::size_t q = 0; q < c.curve.size(); ++q)
      out << tasks[c.task] << ',' << algorithms[c.algorithm] << ',' << c.repetition << ','
          << c.fold << ',' << q << ',' << format_double(c.curve[q]) << '\n';
  }
  return out.str();
}

std::string BenchmarkResult::to_json() const {
  nlohmann::ordered_json j;
  j["budget"] = options.budget;
  j["seed"] = options.seed;
  j["repetitions"] = options.repetitions;
  j["folds"] = options.folds;
  j["tasks"] = tasks;
  j["algorithms"] = algorithms;
  const MeanTable means = all_means(*this);
  nlohmann::ordered_json curves = nlohmann::ordered_json::object();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    nlohmann::ordered_json per_alg = nlohmann::ordered_json::object();
    for (std::size_t a = 0; a < algorithms.size(); ++a) per_alg[algorithms[a]] = means[t][a];
    curves[tasks[t]] = std::move(per_alg);
  }
  j["mean_curves"] = std::move(curves);
  nlohmann::ordered_json ranks = nlohmann::ordered_json::object();
  std::vector<std::vector<double>> by_alg(algorithms.size());
  for (std::size_t q = 0; q <= options.budget; ++q) {
    auto r = ranks_from_means(means, algorithms.size(), q);
    if (r.empty()) break;
    for (std::size_t a = 0; a < algorithms.size(); ++a) by_alg[a].push_back(r[a]);
  }
  for (std::size_t a = 0; a < algorithms.size(); ++a) ranks[algorithms[a]] = by_alg[a];
  j["aligned_ranks"] = std::move(ranks);
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& c : cells)
    if (c.error)
      failures.push_back({{"task", tasks[c.task]},
                          {"algorithm", algorithms[c.algorithm]},
                          {"repetition", c.repetition},
                          {"fold", c.fold},
                          {"error", *c.error}});
  j["failures"] = std::move(failures);
  return j.dump(2) + "\n";
}

}  // namespace cobras
