#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string_view>
#include <variant>
#include <vector>

#include "constraints.hpp"
#include "dataset.hpp"
#include "rng.hpp"

namespace cobras {

using SuperInstanceId = std::size_t;
using ClusterId = std::size_t;

struct SuperInstance {
  SuperInstanceId id = 0;
  std::vector<Index> members;  // sorted
  Index medoid = 0;            // always a training member
  std::optional<SuperInstanceId> parent;
  std::size_t train_count = 0;
};

struct Cluster {
  ClusterId id = 0;
  std::vector<SuperInstanceId> super_instances;
};

/// A committed, total instance -> cluster assignment. Cluster ids are
/// canonical: numbered by first appearance in instance order.
struct Snapshot {
  std::size_t query_count = 0;
  std::vector<int> assignment;
  // medoids of the super-instances of each cluster, by canonical cluster id
  std::vector<std::vector<Index>> cluster_medoids;
  // false while the first merge is still running
  bool merge_complete = true;
};

enum class EndReason { Budget, Stopped, Saturated };
std::string_view to_string(EndReason r);

enum class EventKind { Query, Answer, Derived, Snapshot, RngDraw, End };

struct SessionEvent {
  EventKind kind = EventKind::Query;
  std::size_t qnum = 0;
  Index i = 0;
  Index j = 0;
  QueryPhase phase = QueryPhase::Merge;
  Answer answer = Answer::DontKnow;
  RelationKind relation = RelationKind::Unknown;
  std::size_t snapshot = 0;  // index into the session's snapshot list
  Stream stream = Stream::KMeans;
  std::uint64_t value = 0;
  EndReason reason = EndReason::Budget;
};

struct PendingQuery {
  std::size_t qnum = 0;  // 1-based; equals answered queries + 1
  Index i = 0;
  Index j = 0;
  QueryPhase phase = QueryPhase::Merge;
  friend bool operator==(const PendingQuery&, const PendingQuery&) = default;
};

struct Finished {
  EndReason reason = EndReason::Budget;
};

using Step = std::variant<PendingQuery, Finished>;

/// Live super-instances and the clusters they are grouped into.
class ClusterBook {
 public:
  explicit ClusterBook(std::size_t n = 0) : si_of_(n, 0) {}

  SuperInstanceId add_super_instance(const Dataset& ds, const std::vector<bool>& train,
                                     std::vector<Index> members,
                                     std::optional<SuperInstanceId> parent);
  ClusterId add_cluster(std::vector<SuperInstanceId> super_instances);
  // Removes the super-instance from its cluster (dropping the cluster if it
  // becomes empty) and from the live set.
  void retire(SuperInstanceId id);
  // Replaces clusters at positions a and b by their union; returns its id.
  ClusterId merge(std::size_t pos_a, std::size_t pos_b);

  const SuperInstance& super_instance(SuperInstanceId id) const { return live_.at(id); }
  const std::map<SuperInstanceId, SuperInstance>& super_instances() const noexcept { return live_; }
  const std::vector<Cluster>& clusters() const noexcept { return clusters_; }
  std::size_t cluster_position(SuperInstanceId si) const;

  Snapshot snapshot(std::size_t query_count, bool merge_complete) const;

 private:
  std::map<SuperInstanceId, SuperInstance> live_;
  std::vector<Cluster> clusters_;
  std::vector<SuperInstanceId> si_of_;
  SuperInstanceId next_si_ = 0;
  ClusterId next_cluster_ = 0;
};

/// Mutable state shared by the resumable sub-procedures of one session.
struct Workspace {
  Workspace(std::shared_ptr<const Dataset> data, std::vector<bool> train_mask,
            std::uint64_t master_seed);

  bool is_train(Index i) const { return train.empty() || train[i]; }
  std::uint64_t next_kmeans_seed();
  std::uint64_t next_half_draw();
  void log(SessionEvent e) { events.push_back(e); }

  std::shared_ptr<const Dataset> data;
  const Dataset& ds;
  std::vector<bool> train;
  std::uint64_t seed;
  ConstraintStore store;
  ClusterBook book;
  std::vector<SessionEvent> events;
  std::uint64_t kmeans_calls = 0;
  std::mt19937_64 half_rng;
};

/// At least two training members with two distinct feature vectors among them.
bool is_splittable(const Workspace& ws, const std::vector<Index>& members);

/// K-means over `members` into at most k parts, each holding a training
/// instance. Parts with no training instance join the sibling with the nearest
/// centroid; if that collapses everything into one part the clustering is
/// redone on training members only and the rest go to the nearest centroid.
/// Parts are ordered by their smallest member.
std::vector<std::vector<Index>> partition_with_train(Workspace& ws,
                                                     const std::vector<Index>& members,
                                                     std::size_t k);

struct SplitTarget {
  SuperInstanceId super_instance;
  ClusterId cluster;
};

// Largest splittable super-instance by member count; ties go to the lowest id.
std::optional<SplitTarget> select_split_target(const Workspace& ws);

struct SplitLevelResult {
  std::size_t k = 2;
  std::size_t queries_spent = 0;
};

/// Resumable split-level search: repeated 2-means of a working set, querying
/// the medoids of the halves. Cannot-link descends into a random half; a
/// must-link ends the search with k = 2^max(depth, 1).
class SplitLevelSearch {
 public:
  explicit SplitLevelSearch(std::vector<Index> members) : working_(std::move(members)) {}

  // Next fresh pair to ask, or nullopt once the level is decided.
  std::optional<std::pair<Index, Index>> advance(Workspace& ws);
  void resolve(Workspace& ws, Answer a);

  bool finished() const noexcept { return finished_; }
  SplitLevelResult result() const noexcept { return {k_, queries_}; }
  int depth() const noexcept { return depth_; }

 private:
  void on_relation(Workspace& ws, RelationKind kind);
  void finish();

  std::vector<Index> working_;
  std::vector<std::vector<Index>> halves_;
  Index m1_ = 0, m2_ = 0;
  int depth_ = 0;
  bool finished_ = false;
  std::size_t k_ = 2;
  std::size_t queries_ = 0;
};

/// Resumable bottom-up merging: repeatedly queries the closest pair of
/// clusters with unknown relation (minimum medoid distance) and merges on
/// must-link, until every cluster pair is related.
class CobraMerge {
 public:
  std::optional<std::pair<Index, Index>> advance(Workspace& ws);
  void resolve(Workspace& ws, Answer a);

  bool finished() const noexcept { return finished_; }
  bool changed() const noexcept { return changed_; }
  void clear_changed() noexcept { changed_ = false; }

 private:
  void merge_pair(Workspace& ws, Index mi, Index mj);

  std::pair<Index, Index> pending_{};
  bool finished_ = false;
  bool changed_ = false;
};

// Splits a super-instance into at most k children and gives each its own cluster.
std::vector<SuperInstanceId> split_super_instance(Workspace& ws, SuperInstanceId target,
                                                  std::size_t k);

struct EngineOptions {
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  std::vector<bool> train_mask;  // empty means every instance is a training instance
};

/// A suspendable active clusterer. Callers alternate advance() and answer();
/// all state is plain data so a paused session can move between threads.
class ActiveClusterer {
 public:
  ActiveClusterer(std::shared_ptr<const Dataset> ds, EngineOptions options);
  virtual ~ActiveClusterer() = default;

  Step advance();
  void answer(std::size_t qnum, Answer a);
  void stop();

  bool done() const noexcept { return done_.has_value(); }
  std::optional<EndReason> end_reason() const noexcept { return done_; }
  const std::optional<PendingQuery>& pending() const noexcept { return pending_; }
  const Snapshot& snapshot() const { return snapshots_.back(); }
  const std::vector<Snapshot>& snapshots() const noexcept { return snapshots_; }
  const std::vector<SessionEvent>& events() const noexcept { return ws_.events; }
  const ConstraintStore& store() const noexcept { return ws_.store; }
  const ClusterBook& book() const noexcept { return ws_.book; }
  const Dataset& dataset() const noexcept { return ws_.ds; }
  const EngineOptions& options() const noexcept { return options_; }
  std::size_t answered() const noexcept { return ws_.store.answered(); }

 protected:
  // Runs until a fresh query is needed (returned) or the run ends (nullopt
  // with finish() called).
  virtual std::optional<std::pair<Index, Index>> step() = 0;
  virtual void resolve(Answer a) = 0;
  virtual QueryPhase phase() const = 0;
  // Whether the working clustering should be committed continuously.
  virtual bool commit_continuously() const = 0;
  virtual bool working_state_changed() = 0;

  void commit(bool merge_complete);
  void finish(EndReason reason);
  bool budget_left() const { return ws_.store.answered() < options_.budget; }

  EngineOptions options_;
  Workspace ws_;
  std::size_t iteration_ = 0;

 private:
  std::optional<PendingQuery> pending_;
  std::optional<EndReason> done_;
  std::vector<Snapshot> snapshots_;
};

/// Top-down super-instance refinement alternated with bottom-up merging.
class CobrasEngine final : public ActiveClusterer {
 public:
  CobrasEngine(std::shared_ptr<const Dataset> ds, EngineOptions options);

  std::size_t iteration() const noexcept { return iteration_; }

 protected:
  std::optional<std::pair<Index, Index>> step() override;
  void resolve(Answer a) override;
  QueryPhase phase() const override;
  bool commit_continuously() const override;
  bool working_state_changed() override;

 private:
  enum class Phase { Select, SplitLevel, Merge };
  Phase phase_ = Phase::Select;
  bool first_merge_ = true;
  bool dirty_ = false;
  std::optional<SplitTarget> target_;
  std::optional<SplitLevelSearch> search_;
  std::optional<CobraMerge> merge_;
};

struct RunResult {
  Snapshot clustering;
  std::vector<TranscriptEntry> transcript;
  std::vector<SessionEvent> events;
  std::vector<Snapshot> snapshots;
  EndReason reason = EndReason::Budget;
};

// Drives a clusterer to completion against a synchronous oracle.
RunResult drive(ActiveClusterer& clusterer, Oracle& oracle);

RunResult run(std::shared_ptr<const Dataset> ds, Oracle& oracle, EngineOptions options);

/// Synchronous split-level search on an arbitrary member set.
std::variant<SplitLevelResult, BudgetExhausted> determine_split_level(
    Workspace& ws, const std::vector<Index>& members, Oracle& oracle, Budget& budget);

// Synchronous merging of the clusters currently in ws.book.
std::optional<BudgetExhausted> cobra_merge(Workspace& ws, Oracle& oracle, Budget& budget);

}  // namespace cobras
