#include "constraints.hpp"

#include <numeric>

#include "error.hpp"

namespace cobras {

std::string_view to_string(RelationKind k) {
  switch (k) {
    case RelationKind::MustLink: return "ML";
    case RelationKind::CannotLink: return "CL";
    case RelationKind::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

std::string_view to_string(Answer a) {
  switch (a) {
    case Answer::MustLink: return "ML";
    case Answer::CannotLink: return "CL";
    case Answer::DontKnow: return "DONT_KNOW";
  }
  return "DONT_KNOW";
}

std::string_view to_string(QueryPhase p) {
  return p == QueryPhase::SplitLevel ? "split-level" : "merge";
}

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_size_(n, 1) {
  std::iota(parent_.begin(), parent_.end(), Index{0});
}

Index UnionFind::find(Index x) const {
  Index root = x;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[x] != root) {
    Index next = parent_[x];
    parent_[x] = root;
    x = next;
  }
  return root;
}

Index UnionFind::unite(Index a, Index b) {
  Index ra = find(a);
  Index rb = find(b);
  if (ra == rb) return ra;
  if (rank_size_[ra] < rank_size_[rb]) std::swap(ra, rb);
  parent_[rb] = ra;
  rank_size_[ra] += rank_size_[rb];
  return ra;
}

ConstraintStore::ConstraintStore(std::size_t n) : components_(n) {}

Relation ConstraintStore::relation(Index i, Index j) const {
  if (i >= size() || j >= size())
    throw Error(ErrorCode::InvalidArgument, "instance index out of range");
  if (i == j) return {RelationKind::MustLink, true};
  const Pair key = make_pair_key(i, j);
  if (ml_.contains(key)) return {RelationKind::MustLink, false};
  if (cl_.contains(key)) return {RelationKind::CannotLink, false};
  const Index ri = components_.find(i);
  const Index rj = components_.find(j);
  if (ri == rj) return {RelationKind::MustLink, true};
  if (auto it = cl_roots_.find(ri); it != cl_roots_.end() && it->second.contains(rj))
    return {RelationKind::CannotLink, true};
  return {};
}

void ConstraintStore::link_cannot(Index ri, Index rj) {
  cl_roots_[ri].insert(rj);
  cl_roots_[rj].insert(ri);
}

void ConstraintStore::merge_components(Index i, Index j) {
  const Index ri = components_.find(i);
  const Index rj = components_.find(j);
  const Index root = components_.unite(ri, rj);
  const Index absorbed = root == ri ? rj : ri;
  auto it = cl_roots_.find(absorbed);
  if (it == cl_roots_.end()) return;
  std::set<Index> neighbours = std::move(it->second);
  cl_roots_.erase(it);
  for (Index nb : neighbours) {
    auto& back = cl_roots_[nb];
    back.erase(absorbed);
    back.insert(root);
    cl_roots_[root].insert(nb);
  }
}

void ConstraintStore::record(Index i, Index j, Answer answer, QueryPhase phase,
                             std::size_t step) {
  if (i == j) throw Error(ErrorCode::InvalidArgument, "cannot query an instance with itself");
  const Relation known = relation(i, j);
  TranscriptEntry entry{i, j, answer, phase, step, false};
  if (known.known() && answer != Answer::DontKnow) {
    const bool same = (answer == Answer::MustLink) == (known.kind == RelationKind::MustLink);
    if (same)
      throw Error(ErrorCode::State, "redundant query: relation between " + std::to_string(i) +
                                        " and " + std::to_string(j) + " is already known");
    entry.conflict = true;
    ++conflicts_;
    transcript_.push_back(entry);
    return;
  }
  const Pair key = make_pair_key(i, j);
  switch (answer) {
    case Answer::MustLink:
      ml_.insert(key);
      merge_components(i, j);
      break;
    case Answer::CannotLink:
      cl_.insert(key);
      link_cannot(components_.find(i), components_.find(j));
      break;
    case Answer::DontKnow:
      skipped_.insert(key);
      break;
  }
  transcript_.push_back(entry);
}

LabelOracle::LabelOracle(const Dataset& ds, std::vector<bool> train_mask)
    : ds_(&ds), train_(std::move(train_mask)) {
  if (!ds.has_labels()) throw Error(ErrorCode::InvalidArgument, "label oracle needs labels");
  if (!train_.empty() && train_.size() != ds.size())
    throw Error(ErrorCode::InvalidArgument, "train mask size mismatch");
}

Answer LabelOracle::answer(Index i, Index j) {
  if (!train_.empty() && (!train_.at(i) || !train_.at(j)))
    throw Error(ErrorCode::OracleViolation,
                "query (" + std::to_string(i) + ", " + std::to_string(j) +
                    ") touches a test instance");
  return ds_->label(i) == ds_->label(j) ? Answer::MustLink : Answer::CannotLink;
}

Answer ScriptedOracle::answer(Index i, Index j) {
  if (next_ >= script_.size()) throw Error(ErrorCode::State, "scripted oracle exhausted");
  asked_.push_back(make_pair_key(i, j));
  return script_[next_++];
}

QueryResult query(ConstraintStore& store, Oracle& oracle, Budget& budget, Index i, Index j,
                  QueryPhase phase) {
  if (i == j) throw Error(ErrorCode::InvalidArgument, "cannot query an instance with itself");
  const Relation known = store.relation(i, j);
  if (known.known()) return known;
  if (store.skipped(i, j)) return Relation{};
  if (budget.exhausted()) return BudgetExhausted{};
  const Answer a = oracle.answer(i, j);
  ++budget.answered;
  store.record(i, j, a, phase);
  switch (a) {
    case Answer::MustLink: return Relation{RelationKind::MustLink, false};
    case Answer::CannotLink: return Relation{RelationKind::CannotLink, false};
    case Answer::DontKnow: return Relation{};
  }
  return Relation{};
}

}  // namespace cobras
