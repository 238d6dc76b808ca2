#include "engine.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "error.hpp"
#include "geometry.hpp"

namespace cobras {

std::string_view to_string(EndReason r) {
  switch (r) {
    case EndReason::Budget: return "budget";
    case EndReason::Stopped: return "stopped";
    case EndReason::Saturated: return "saturated";
  }
  return "budget";
}

// ---------------------------------------------------------------------------
// ClusterBook

SuperInstanceId ClusterBook::add_super_instance(const Dataset& ds,
                                                const std::vector<bool>& train,
                                                std::vector<Index> members,
                                                std::optional<SuperInstanceId> parent) {
  if (members.empty()) throw Error(ErrorCode::Internal, "empty super-instance");
  std::sort(members.begin(), members.end());
  SuperInstance si;
  si.id = next_si_++;
  si.parent = parent;
  for (Index m : members)
    if (train.empty() || train[m]) ++si.train_count;
  // Only a root over a dataset without training data lacks a training medoid;
  // such a super-instance is never splittable and never queried.
  si.medoid = si.train_count > 0 ? medoid(ds, members, train) : members.front();
  for (Index m : members) si_of_.at(m) = si.id;
  si.members = std::move(members);
  const SuperInstanceId id = si.id;
  live_.emplace(id, std::move(si));
  return id;
}

ClusterId ClusterBook::add_cluster(std::vector<SuperInstanceId> super_instances) {
  if (super_instances.empty()) throw Error(ErrorCode::Internal, "empty cluster");
  clusters_.push_back(Cluster{next_cluster_++, std::move(super_instances)});
  return clusters_.back().id;
}

std::size_t ClusterBook::cluster_position(SuperInstanceId si) const {
  for (std::size_t p = 0; p < clusters_.size(); ++p) {
    const auto& s = clusters_[p].super_instances;
    if (std::find(s.begin(), s.end(), si) != s.end()) return p;
  }
  throw Error(ErrorCode::Internal, "super-instance " + std::to_string(si) + " has no cluster");
}

void ClusterBook::retire(SuperInstanceId id) {
  const std::size_t pos = cluster_position(id);
  auto& s = clusters_[pos].super_instances;
  s.erase(std::find(s.begin(), s.end(), id));
  if (s.empty()) clusters_.erase(clusters_.begin() + static_cast<std::ptrdiff_t>(pos));
  live_.erase(id);
}

ClusterId ClusterBook::merge(std::size_t pos_a, std::size_t pos_b) {
  if (pos_a == pos_b) throw Error(ErrorCode::Internal, "merging a cluster with itself");
  if (pos_a > pos_b) std::swap(pos_a, pos_b);
  std::vector<SuperInstanceId> joined = clusters_[pos_a].super_instances;
  const auto& second = clusters_[pos_b].super_instances;
  joined.insert(joined.end(), second.begin(), second.end());
  clusters_.erase(clusters_.begin() + static_cast<std::ptrdiff_t>(pos_b));
  clusters_.erase(clusters_.begin() + static_cast<std::ptrdiff_t>(pos_a));
  return add_cluster(std::move(joined));
}

Snapshot ClusterBook::snapshot(std::size_t query_count, bool merge_complete) const {
  std::map<SuperInstanceId, std::size_t> pos_of;
  for (std::size_t p = 0; p < clusters_.size(); ++p)
    for (SuperInstanceId s : clusters_[p].super_instances) pos_of[s] = p;

  Snapshot snap;
  snap.query_count = query_count;
  snap.merge_complete = merge_complete;
  snap.assignment.resize(si_of_.size());
  std::vector<int> canon(clusters_.size(), -1);
  int next = 0;
  for (Index i = 0; i < si_of_.size(); ++i) {
    const std::size_t p = pos_of.at(si_of_[i]);
    if (canon[p] < 0) {
      canon[p] = next++;
      std::vector<Index> medoids;
      for (SuperInstanceId s : clusters_[p].super_instances) medoids.push_back(live_.at(s).medoid);
      snap.cluster_medoids.push_back(std::move(medoids));
    }
    snap.assignment[i] = canon[p];
  }
  return snap;
}

// ---------------------------------------------------------------------------
// Workspace

Workspace::Workspace(std::shared_ptr<const Dataset> d, std::vector<bool> train_mask,
                     std::uint64_t master_seed)
    : data(d ? std::move(d) : throw Error(ErrorCode::InvalidArgument, "null dataset")),
      ds(*data),
      train(std::move(train_mask)),
      seed(master_seed),
      store(ds.size()),
      book(ds.size()),
      half_rng(derive_seed(master_seed, Stream::HalfChoice, 0)) {
  if (!train.empty() && train.size() != ds.size())
    throw Error(ErrorCode::InvalidArgument, "train mask size does not match dataset");
}

std::uint64_t Workspace::next_kmeans_seed() {
  const std::uint64_t s = derive_seed(seed, Stream::KMeans, kmeans_calls++);
  SessionEvent e;
  e.kind = EventKind::RngDraw;
  e.stream = Stream::KMeans;
  e.value = s;
  log(e);
  return s;
}

std::uint64_t Workspace::next_half_draw() {
  const std::uint64_t v = half_rng();
  SessionEvent e;
  e.kind = EventKind::RngDraw;
  e.stream = Stream::HalfChoice;
  e.value = v;
  log(e);
  return v;
}

// ---------------------------------------------------------------------------
// Splitting helpers

bool is_splittable(const Workspace& ws, const std::vector<Index>& members) {
  std::optional<Index> first;
  bool distinct = false;
  std::size_t train = 0;
  for (Index m : members) {
    if (!ws.is_train(m)) continue;
    ++train;
    if (!first) {
      first = m;
    } else if (!distinct) {
      auto a = ws.ds.row(*first);
      auto b = ws.ds.row(m);
      distinct = !std::equal(a.begin(), a.end(), b.begin());
    }
    if (train >= 2 && distinct) return true;
  }
  return false;
}

namespace {

std::vector<std::vector<Index>> ordered(std::vector<std::vector<Index>> parts) {
  for (auto& p : parts) std::sort(p.begin(), p.end());
  std::sort(parts.begin(), parts.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return parts;
}

int nearest_centroid(const Dataset& ds, Index x, const std::vector<double>& centroids, int k,
                     const std::vector<bool>& allowed) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  const std::size_t d = ds.dim();
  for (int j = 0; j < k; ++j) {
    if (!allowed[static_cast<std::size_t>(j)]) continue;
    const double dj = squared_euclidean(
        ds.row(x), std::span<const double>(centroids.data() + static_cast<std::size_t>(j) * d, d));
    if (dj < best_d) {
      best_d = dj;
      best = j;
    }
  }
  return best;
}

}  // namespace

std::vector<std::vector<Index>> partition_with_train(Workspace& ws,
                                                     const std::vector<Index>& members,
                                                     std::size_t k) {
  k = std::min(k, members.size());
  if (k <= 1) return {members};
  const Dataset& ds = ws.ds;
  const std::size_t d = ds.dim();

  const KMeansResult km = kmeans(ds, members, static_cast<int>(k), ws.next_kmeans_seed());
  std::vector<std::vector<Index>> parts(static_cast<std::size_t>(km.k));
  std::vector<bool> has_train(static_cast<std::size_t>(km.k), false);
  for (std::size_t p = 0; p < members.size(); ++p) {
    const auto c = static_cast<std::size_t>(km.assignment[p]);
    parts[c].push_back(members[p]);
    if (ws.is_train(members[p])) has_train[c] = true;
  }
  if (std::none_of(has_train.begin(), has_train.end(), [](bool b) { return b; }))
    return {members};

  for (int c = 0; c < km.k; ++c) {
    const auto cu = static_cast<std::size_t>(c);
    if (has_train[cu]) continue;
    // Join the training-bearing part whose centroid is closest to ours.
    std::span<const double> own(km.centroids.data() + cu * d, d);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int o = 0; o < km.k; ++o) {
      if (!has_train[static_cast<std::size_t>(o)]) continue;
      const double dist = squared_euclidean(
          own, std::span<const double>(km.centroids.data() + static_cast<std::size_t>(o) * d, d));
      if (dist < best_d) {
        best_d = dist;
        best = o;
      }
    }
    auto& dst = parts[static_cast<std::size_t>(best)];
    dst.insert(dst.end(), parts[cu].begin(), parts[cu].end());
    parts[cu].clear();
  }
  std::vector<std::vector<Index>> kept;
  for (auto& p : parts)
    if (!p.empty()) kept.push_back(std::move(p));
  if (kept.size() >= 2 || !is_splittable(ws, members)) return ordered(std::move(kept));

  // Every training instance landed in one part; cluster the training
  // instances on their own and attach the rest to the nearest centroid.
  std::vector<Index> train_members;
  for (Index m : members)
    if (ws.is_train(m)) train_members.push_back(m);
  const KMeansResult tk =
      kmeans(ds, train_members, static_cast<int>(std::min(k, train_members.size())),
             ws.next_kmeans_seed());
  std::vector<std::vector<Index>> fallback(static_cast<std::size_t>(tk.k));
  for (std::size_t p = 0; p < train_members.size(); ++p)
    fallback[static_cast<std::size_t>(tk.assignment[p])].push_back(train_members[p]);
  const std::vector<bool> all(static_cast<std::size_t>(tk.k), true);
  for (Index m : members)
    if (!ws.is_train(m))
      fallback[static_cast<std::size_t>(nearest_centroid(ds, m, tk.centroids, tk.k, all))]
          .push_back(m);
  return ordered(std::move(fallback));
}

std::optional<SplitTarget> select_split_target(const Workspace& ws) {
  std::optional<SplitTarget> best;
  std::size_t best_size = 0;
  for (const Cluster& c : ws.book.clusters()) {
    for (SuperInstanceId s : c.super_instances) {
      const SuperInstance& si = ws.book.super_instance(s);
      const std::size_t size = si.members.size();
      if (best && (size < best_size || (size == best_size && si.id > best->super_instance)))
        continue;
      if (!is_splittable(ws, si.members)) continue;
      best = SplitTarget{si.id, c.id};
      best_size = size;
    }
  }
  return best;
}

std::vector<SuperInstanceId> split_super_instance(Workspace& ws, SuperInstanceId target,
                                                  std::size_t k) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "split level must be at least 2");
  const std::vector<Index> members = ws.book.super_instance(target).members;
  auto parts = partition_with_train(ws, members, k);
  ws.book.retire(target);
  std::vector<SuperInstanceId> children;
  for (auto& p : parts) {
    const SuperInstanceId id = ws.book.add_super_instance(ws.ds, ws.train, std::move(p), target);
    ws.book.add_cluster({id});
    children.push_back(id);
  }
  return children;
}

// ---------------------------------------------------------------------------
// SplitLevelSearch

void SplitLevelSearch::finish() {
  finished_ = true;
  const int level = std::max(depth_, 1);
  k_ = level >= 63 ? std::numeric_limits<std::size_t>::max() : std::size_t{1} << level;
}

std::optional<std::pair<Index, Index>> SplitLevelSearch::advance(Workspace& ws) {
  while (!finished_) {
    if (halves_.empty()) {
      halves_ = partition_with_train(ws, working_, 2);
      if (halves_.size() < 2) {
        finish();
        break;
      }
      m1_ = medoid(ws.ds, halves_[0], ws.train);
      m2_ = medoid(ws.ds, halves_[1], ws.train);
    }
    const Relation rel = ws.store.relation(m1_, m2_);
    if (rel.known()) {
      SessionEvent e;
      e.kind = EventKind::Derived;
      e.i = m1_;
      e.j = m2_;
      e.phase = QueryPhase::SplitLevel;
      e.relation = rel.kind;
      ws.log(e);
      on_relation(ws, rel.kind);
      continue;
    }
    if (ws.store.skipped(m1_, m2_)) {
      finish();
      break;
    }
    return std::pair{m1_, m2_};
  }
  return std::nullopt;
}

void SplitLevelSearch::resolve(Workspace& ws, Answer a) {
  ++queries_;
  switch (a) {
    case Answer::MustLink: on_relation(ws, RelationKind::MustLink); break;
    case Answer::CannotLink: on_relation(ws, RelationKind::CannotLink); break;
    case Answer::DontKnow: finish(); break;
  }
}

void SplitLevelSearch::on_relation(Workspace& ws, RelationKind kind) {
  if (kind == RelationKind::MustLink) {
    finish();
    return;
  }
  ++depth_;
  const std::size_t pick = static_cast<std::size_t>(ws.next_half_draw() >> 63);
  std::vector<Index>& chosen = halves_[pick];
  std::vector<Index>& other = halves_[1 - pick];
  if (is_splittable(ws, chosen)) {
    working_ = std::move(chosen);
  } else if (is_splittable(ws, other)) {
    working_ = std::move(other);
  } else {
    finish();
  }
  halves_.clear();
}

// ---------------------------------------------------------------------------
// CobraMerge

std::optional<std::pair<Index, Index>> CobraMerge::advance(Workspace& ws) {
  while (!finished_) {
    const auto& clusters = ws.book.clusters();
    std::vector<std::vector<Index>> medoids(clusters.size());
    for (std::size_t p = 0; p < clusters.size(); ++p)
      for (SuperInstanceId s : clusters[p].super_instances)
        medoids[p].push_back(ws.book.super_instance(s).medoid);

    std::optional<std::tuple<std::size_t, std::size_t, Index, Index>> must_merge;
    std::optional<std::pair<Index, Index>> closest;
    double closest_d = std::numeric_limits<double>::infinity();

    for (std::size_t a = 0; a < clusters.size() && !must_merge; ++a) {
      for (std::size_t b = a + 1; b < clusters.size() && !must_merge; ++b) {
        bool resolved = false;
        for (Index u : medoids[a]) {
          for (Index v : medoids[b]) {
            const Relation r = ws.store.relation(u, v);
            if (r.kind == RelationKind::MustLink) {
              must_merge = std::tuple{a, b, u, v};
              break;
            }
            if (r.kind == RelationKind::CannotLink || ws.store.skipped(u, v)) resolved = true;
          }
          if (must_merge) break;
        }
        if (must_merge || resolved) continue;
        for (Index u : medoids[a])
          for (Index v : medoids[b]) {
            const double dist = euclidean(ws.ds.row(u), ws.ds.row(v));
            if (dist < closest_d) {
              closest_d = dist;
              closest = std::pair{u, v};
            }
          }
      }
    }

    if (must_merge) {
      auto [a, b, u, v] = *must_merge;
      SessionEvent e;
      e.kind = EventKind::Derived;
      e.i = u;
      e.j = v;
      e.phase = QueryPhase::Merge;
      e.relation = RelationKind::MustLink;
      ws.log(e);
      ws.book.merge(a, b);
      changed_ = true;
      continue;
    }
    if (closest) {
      pending_ = *closest;
      return closest;
    }
    finished_ = true;
  }
  return std::nullopt;
}

void CobraMerge::merge_pair(Workspace& ws, Index mi, Index mj) {
  std::optional<std::size_t> pa, pb;
  const auto& clusters = ws.book.clusters();
  for (std::size_t p = 0; p < clusters.size(); ++p)
    for (SuperInstanceId s : clusters[p].super_instances) {
      const Index m = ws.book.super_instance(s).medoid;
      if (m == mi) pa = p;
      if (m == mj) pb = p;
    }
  if (!pa || !pb) throw Error(ErrorCode::Internal, "merge pair is not a pair of medoids");
  ws.book.merge(*pa, *pb);
  changed_ = true;
}

void CobraMerge::resolve(Workspace& ws, Answer a) {
  if (a == Answer::MustLink) merge_pair(ws, pending_.first, pending_.second);
}

// ---------------------------------------------------------------------------
// ActiveClusterer

ActiveClusterer::ActiveClusterer(std::shared_ptr<const Dataset> ds, EngineOptions options)
    : options_(std::move(options)), ws_(std::move(ds), options_.train_mask, options_.seed) {
  if (ws_.ds.empty()) throw Error(ErrorCode::InvalidArgument, "dataset is empty");
}

void ActiveClusterer::commit(bool merge_complete) {
  snapshots_.push_back(ws_.book.snapshot(ws_.store.answered(), merge_complete));
  SessionEvent e;
  e.kind = EventKind::Snapshot;
  e.snapshot = snapshots_.size() - 1;
  ws_.log(e);
}

void ActiveClusterer::finish(EndReason reason) {
  if (done_) return;
  pending_.reset();
  if (commit_continuously() && working_state_changed()) commit(false);
  done_ = reason;
  SessionEvent e;
  e.kind = EventKind::End;
  e.reason = reason;
  ws_.log(e);
}

Step ActiveClusterer::advance() {
  if (done_) return Finished{*done_};
  if (pending_) return *pending_;
  auto pair = step();
  if (done_) return Finished{*done_};
  if (!pair) {
    finish(EndReason::Saturated);
    return Finished{*done_};
  }
  if (!budget_left()) {
    finish(EndReason::Budget);
    return Finished{*done_};
  }
  if (commit_continuously() && working_state_changed()) commit(false);
  pending_ = PendingQuery{ws_.store.answered() + 1, pair->first, pair->second, phase()};
  SessionEvent e;
  e.kind = EventKind::Query;
  e.qnum = pending_->qnum;
  e.i = pending_->i;
  e.j = pending_->j;
  e.phase = pending_->phase;
  ws_.log(e);
  return *pending_;
}

void ActiveClusterer::answer(std::size_t qnum, Answer a) {
  if (done_) throw Error(ErrorCode::State, "session has ended");
  if (!pending_) throw Error(ErrorCode::State, "no query is pending");
  if (qnum != pending_->qnum)
    throw Error(ErrorCode::State, "answer for query " + std::to_string(qnum) +
                                      " but query " + std::to_string(pending_->qnum) +
                                      " is pending");
  const PendingQuery q = *pending_;
  ws_.store.record(q.i, q.j, a, q.phase, iteration_);
  SessionEvent e;
  e.kind = EventKind::Answer;
  e.qnum = q.qnum;
  e.i = q.i;
  e.j = q.j;
  e.phase = q.phase;
  e.answer = a;
  ws_.log(e);
  pending_.reset();
  resolve(a);
  if (commit_continuously() && working_state_changed()) commit(false);
}

void ActiveClusterer::stop() { finish(EndReason::Stopped); }

// ---------------------------------------------------------------------------
// CobrasEngine

CobrasEngine::CobrasEngine(std::shared_ptr<const Dataset> ds, EngineOptions options)
    : ActiveClusterer(std::move(ds), std::move(options)) {
  std::vector<Index> all(ws_.ds.size());
  std::iota(all.begin(), all.end(), Index{0});
  const SuperInstanceId root = ws_.book.add_super_instance(ws_.ds, ws_.train, all, std::nullopt);
  ws_.book.add_cluster({root});
  commit(true);
}

std::optional<std::pair<Index, Index>> CobrasEngine::step() {
  for (;;) {
    switch (phase_) {
      case Phase::Select:
        if (!budget_left()) {
          finish(EndReason::Budget);
          return std::nullopt;
        }
        target_ = select_split_target(ws_);
        if (!target_) {
          finish(EndReason::Saturated);
          return std::nullopt;
        }
        ++iteration_;
        search_.emplace(ws_.book.super_instance(target_->super_instance).members);
        phase_ = Phase::SplitLevel;
        break;
      case Phase::SplitLevel:
        if (auto p = search_->advance(ws_)) return p;
        split_super_instance(ws_, target_->super_instance, search_->result().k);
        search_.reset();
        merge_.emplace();
        dirty_ = first_merge_;
        phase_ = Phase::Merge;
        break;
      case Phase::Merge:
        if (auto p = merge_->advance(ws_)) return p;
        merge_.reset();
        dirty_ = false;
        commit(true);
        first_merge_ = false;
        phase_ = Phase::Select;
        break;
    }
  }
}

void CobrasEngine::resolve(Answer a) {
  if (phase_ == Phase::SplitLevel)
    search_->resolve(ws_, a);
  else if (phase_ == Phase::Merge)
    merge_->resolve(ws_, a);
  else
    throw Error(ErrorCode::Internal, "answer outside a query phase");
}

QueryPhase CobrasEngine::phase() const {
  return phase_ == Phase::SplitLevel ? QueryPhase::SplitLevel : QueryPhase::Merge;
}

bool CobrasEngine::commit_continuously() const { return first_merge_ && phase_ == Phase::Merge; }

bool CobrasEngine::working_state_changed() {
  bool changed = dirty_;
  if (merge_ && merge_->changed()) {
    changed = true;
    merge_->clear_changed();
  }
  dirty_ = false;
  return changed;
}

// ---------------------------------------------------------------------------
// Synchronous drivers

RunResult drive(ActiveClusterer& clusterer, Oracle& oracle) {
  for (;;) {
    Step s = clusterer.advance();
    if (auto* f = std::get_if<Finished>(&s)) {
      RunResult r;
      r.clustering = clusterer.snapshot();
      r.transcript = clusterer.store().transcript();
      r.events = clusterer.events();
      r.snapshots = clusterer.snapshots();
      r.reason = f->reason;
      return r;
    }
    const auto& q = std::get<PendingQuery>(s);
    clusterer.answer(q.qnum, oracle.answer(q.i, q.j));
  }
}

RunResult run(std::shared_ptr<const Dataset> ds, Oracle& oracle, EngineOptions options) {
  CobrasEngine engine(std::move(ds), std::move(options));
  return drive(engine, oracle);
}

std::variant<SplitLevelResult, BudgetExhausted> determine_split_level(
    Workspace& ws, const std::vector<Index>& members, Oracle& oracle, Budget& budget) {
  SplitLevelSearch search(members);
  while (auto p = search.advance(ws)) {
    if (budget.exhausted()) return BudgetExhausted{};
    const Answer a = oracle.answer(p->first, p->second);
    ++budget.answered;
    ws.store.record(p->first, p->second, a, QueryPhase::SplitLevel);
    search.resolve(ws, a);
  }
  return search.result();
}

std::optional<BudgetExhausted> cobra_merge(Workspace& ws, Oracle& oracle, Budget& budget) {
  CobraMerge merge;
  while (auto p = merge.advance(ws)) {
    if (budget.exhausted()) return BudgetExhausted{};
    const Answer a = oracle.answer(p->first, p->second);
    ++budget.answered;
    ws.store.record(p->first, p->second, a, QueryPhase::Merge);
    merge.resolve(ws, a);
  }
  return std::nullopt;
}

}  // namespace cobras
