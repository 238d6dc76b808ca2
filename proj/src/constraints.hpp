#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "dataset.hpp"

namespace cobras {

enum class RelationKind { MustLink, CannotLink, Unknown };

struct Relation {
  RelationKind kind = RelationKind::Unknown;
  bool derived = false;  // true when entailed rather than directly answered

  bool known() const noexcept { return kind != RelationKind::Unknown; }
  friend bool operator==(const Relation&, const Relation&) = default;
};

enum class Answer { MustLink, CannotLink, DontKnow };

enum class QueryPhase { SplitLevel, Merge };

std::string_view to_string(RelationKind k);
std::string_view to_string(Answer a);
std::string_view to_string(QueryPhase p);

// Unordered instance pair, stored as (min, max).
using Pair = std::pair<Index, Index>;
inline Pair make_pair_key(Index i, Index j) { return i < j ? Pair{i, j} : Pair{j, i}; }

struct TranscriptEntry {
  Index i = 0;
  Index j = 0;
  Answer answer = Answer::DontKnow;
  QueryPhase phase = QueryPhase::Merge;
  std::size_t step = 0;   // engine iteration that issued the query
  bool conflict = false;  // answer contradicted an entailed relation and was discarded
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n = 0);
  Index find(Index x) const;
  // Returns the surviving root.
  Index unite(Index a, Index b);
  std::size_t size() const noexcept { return parent_.size(); }

 private:
  mutable std::vector<Index> parent_;
  std::vector<std::size_t> rank_size_;
};

/// Answered must-link / cannot-link pairs plus their entailments.
///
/// Must-link components are kept in a union-find; answered cannot-links are
/// stored between component roots and remapped whenever two components merge.
/// Entailment stops at (ML component x answered CL); nothing further is
/// propagated.
class ConstraintStore {
 public:
  explicit ConstraintStore(std::size_t n = 0);

  Relation relation(Index i, Index j) const;

  /// Records an oracle answer. Throws on i == j and on a pair whose relation
  /// is already known with the same value (a redundant query). An answer that
  /// contradicts an entailed relation is kept in the transcript, flagged, and
  /// not applied.
  void record(Index i, Index j, Answer answer, QueryPhase phase = QueryPhase::Merge,
              std::size_t step = 0);

  bool skipped(Index i, Index j) const { return skipped_.contains(make_pair_key(i, j)); }

  const std::set<Pair>& must_links() const noexcept { return ml_; }
  const std::set<Pair>& cannot_links() const noexcept { return cl_; }
  const std::vector<TranscriptEntry>& transcript() const noexcept { return transcript_; }
  std::size_t answered() const noexcept { return transcript_.size(); }
  std::size_t conflicts() const noexcept { return conflicts_; }
  std::size_t size() const noexcept { return components_.size(); }

 private:
  void link_cannot(Index ri, Index rj);
  void merge_components(Index i, Index j);

  UnionFind components_;
  std::unordered_map<Index, std::set<Index>> cl_roots_;
  std::set<Pair> ml_;
  std::set<Pair> cl_;
  std::set<Pair> skipped_;
  std::vector<TranscriptEntry> transcript_;
  std::size_t conflicts_ = 0;
};

class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual Answer answer(Index i, Index j) = 0;
};

/// Answers from ground-truth labels. Only training instances may be queried;
/// anything else is a harness bug and throws.
class LabelOracle final : public Oracle {
 public:
  explicit LabelOracle(const Dataset& ds, std::vector<bool> train_mask = {});
  Answer answer(Index i, Index j) override;

 private:
  const Dataset* ds_;
  std::vector<bool> train_;
};

// Replays a fixed answer list; throws once it runs out.
class ScriptedOracle final : public Oracle {
 public:
  explicit ScriptedOracle(std::vector<Answer> script) : script_(std::move(script)) {}
  Answer answer(Index i, Index j) override;
  std::size_t consumed() const noexcept { return next_; }
  const std::vector<Pair>& asked() const noexcept { return asked_; }

 private:
  std::vector<Answer> script_;
  std::size_t next_ = 0;
  std::vector<Pair> asked_;
};

struct Budget {
  std::size_t limit = 0;
  std::size_t answered = 0;
  bool exhausted() const noexcept { return answered >= limit; }
};

struct BudgetExhausted {
  friend bool operator==(const BudgetExhausted&, const BudgetExhausted&) = default;
};

using QueryResult = std::variant<Relation, BudgetExhausted>;

/// Known or entailed relations, and pairs already answered DONT_KNOW, come back
/// without touching the budget. A fresh pair spends one unit and its answer is
/// recorded in `store`.
QueryResult query(ConstraintStore& store, Oracle& oracle, Budget& budget, Index i, Index j,
                  QueryPhase phase = QueryPhase::Merge);

}  // namespace cobras
