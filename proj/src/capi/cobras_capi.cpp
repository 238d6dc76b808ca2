#include "cobras/cobras.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "dataset.hpp"
#include "engine.hpp"
#include "error.hpp"
#include "evaluation.hpp"
#include "trace.hpp"

struct cobras_dataset {
  std::shared_ptr<const cobras::Dataset> data;
};

struct cobras_session {
  std::unique_ptr<cobras::CobrasEngine> engine;
  cobras::TraceHeader header;
};

struct cobras_benchmark {
  std::vector<cobras::BenchmarkTask> tasks;
  std::vector<cobras::AlgorithmSpec> algorithms;
  std::optional<cobras::BenchmarkResult> result;
};

namespace {

thread_local std::string g_last_error;

cobras_status to_status(cobras::ErrorCode code) {
  switch (code) {
    case cobras::ErrorCode::InvalidArgument: return COBRAS_ERR_INVALID_ARGUMENT;
    case cobras::ErrorCode::Io: return COBRAS_ERR_IO;
    case cobras::ErrorCode::Parse: return COBRAS_ERR_PARSE;
    case cobras::ErrorCode::State: return COBRAS_ERR_STATE;
    case cobras::ErrorCode::OracleViolation: return COBRAS_ERR_ORACLE;
    case cobras::ErrorCode::Internal: return COBRAS_ERR_INTERNAL;
  }
  return COBRAS_ERR_INTERNAL;
}

template <class F>
cobras_status try_(F&& f) {
  try {
    f();
    g_last_error.clear();
    return COBRAS_OK;
  } catch (const cobras::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return COBRAS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return COBRAS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return COBRAS_ERR_INTERNAL;
  }
}

template <class T>
T& deref(T* p, const char* what) {
  if (p == nullptr)
    throw cobras::Error(cobras::ErrorCode::InvalidArgument, std::string("null ") + what);
  return *p;
}

const char* cstr(const char* p, const char* what) {
  if (p == nullptr)
    throw cobras::Error(cobras::ErrorCode::InvalidArgument, std::string("null ") + what);
  return p;
}

void require_len(size_t have, size_t need) {
  if (have < need)
    throw cobras::Error(cobras::ErrorCode::InvalidArgument,
                        "output buffer holds " + std::to_string(have) + " values, need " +
                            std::to_string(need));
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

cobras_dataset* wrap(cobras::Dataset ds) {
  return new cobras_dataset{std::make_shared<const cobras::Dataset>(std::move(ds))};
}

cobras_answer to_c(cobras::Answer a) {
  switch (a) {
    case cobras::Answer::MustLink: return COBRAS_MUST_LINK;
    case cobras::Answer::CannotLink: return COBRAS_CANNOT_LINK;
    case cobras::Answer::DontKnow: return COBRAS_DONT_KNOW;
  }
  return COBRAS_DONT_KNOW;
}

cobras::Answer from_c(cobras_answer a) {
  switch (a) {
    case COBRAS_MUST_LINK: return cobras::Answer::MustLink;
    case COBRAS_CANNOT_LINK: return cobras::Answer::CannotLink;
    case COBRAS_DONT_KNOW: return cobras::Answer::DontKnow;
  }
  throw cobras::Error(cobras::ErrorCode::InvalidArgument, "unknown answer value");
}

cobras_end_reason to_c(cobras::EndReason r) {
  switch (r) {
    case cobras::EndReason::Budget: return COBRAS_END_BUDGET;
    case cobras::EndReason::Stopped: return COBRAS_END_STOPPED;
    case cobras::EndReason::Saturated: return COBRAS_END_SATURATED;
  }
  return COBRAS_END_BUDGET;
}

cobras_step to_c(const cobras::Step& s) {
  cobras_step out{};
  if (const auto* f = std::get_if<cobras::Finished>(&s)) {
    out.kind = COBRAS_STEP_DONE;
    out.reason = to_c(f->reason);
  } else {
    const auto& q = std::get<cobras::PendingQuery>(s);
    out.kind = COBRAS_STEP_QUERY;
    out.qnum = q.qnum;
    out.i = q.i;
    out.j = q.j;
    out.phase = q.phase == cobras::QueryPhase::SplitLevel ? COBRAS_PHASE_SPLIT_LEVEL
                                                          : COBRAS_PHASE_MERGE;
  }
  return out;
}

const cobras::BenchmarkResult& result_of(const cobras_benchmark* b) {
  const auto& bench = deref(b, "benchmark");
  if (!bench.result) throw cobras::Error(cobras::ErrorCode::State, "benchmark has not been run");
  return *bench.result;
}

}  // namespace

extern "C" {

const char* cobras_version(void) { return cobras::kVersion; }

const char* cobras_status_string(cobras_status status) {
  switch (status) {
    case COBRAS_OK: return "ok";
    case COBRAS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case COBRAS_ERR_IO: return "i/o error";
    case COBRAS_ERR_PARSE: return "parse error";
    case COBRAS_ERR_STATE: return "invalid state";
    case COBRAS_ERR_ORACLE: return "oracle violation";
    case COBRAS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* cobras_last_error(void) { return g_last_error.c_str(); }

void cobras_string_free(char* s) { std::free(s); }

cobras_status cobras_dataset_load_csv(const char* path, const char* label_column,
                                      cobras_dataset** out) {
  return try_([&] {
    std::optional<std::string> label;
    if (label_column != nullptr) label = label_column;
    deref(out, "output") = wrap(cobras::load_csv(cstr(path, "path"), label));
  });
}

cobras_status cobras_dataset_create(const double* values, size_t n, size_t d, const int* labels,
                                    cobras_dataset** out) {
  return try_([&] {
    if (n > 0 && values == nullptr)
      throw cobras::Error(cobras::ErrorCode::InvalidArgument, "null values");
    std::vector<double> v(values, values + n * d);
    std::optional<std::vector<int>> l;
    if (labels != nullptr) l = std::vector<int>(labels, labels + n);
    deref(out, "output") = wrap(cobras::Dataset(std::move(v), d, std::move(l)));
  });
}

cobras_status cobras_dataset_deduplicate(const cobras_dataset* ds, cobras_dataset** out) {
  return try_([&] {
    deref(out, "output") = wrap(cobras::deduplicate(*deref(ds, "dataset").data));
  });
}

cobras_status cobras_dataset_normalize(const cobras_dataset* ds, cobras_dataset** out) {
  return try_([&] { deref(out, "output") = wrap(cobras::normalize(*deref(ds, "dataset").data)); });
}

void cobras_dataset_free(cobras_dataset* ds) { delete ds; }

size_t cobras_dataset_size(const cobras_dataset* ds) { return ds ? ds->data->size() : 0; }
size_t cobras_dataset_dim(const cobras_dataset* ds) { return ds ? ds->data->dim() : 0; }
int cobras_dataset_has_labels(const cobras_dataset* ds) {
  return ds && ds->data->has_labels() ? 1 : 0;
}

cobras_status cobras_dataset_row(const cobras_dataset* ds, size_t i, double* out, size_t out_len) {
  return try_([&] {
    const auto& d = *deref(ds, "dataset").data;
    if (i >= d.size()) throw cobras::Error(cobras::ErrorCode::InvalidArgument, "row out of range");
    require_len(out_len, d.dim());
    auto r = d.row(i);
    std::copy(r.begin(), r.end(), &deref(out, "output buffer"));
  });
}

cobras_status cobras_dataset_labels(const cobras_dataset* ds, int* out, size_t out_len) {
  return try_([&] {
    const auto& labels = deref(ds, "dataset").data->labels();
    require_len(out_len, labels.size());
    std::copy(labels.begin(), labels.end(), &deref(out, "output buffer"));
  });
}

cobras_status cobras_dataset_projection(const cobras_dataset* ds, double* out, size_t out_len) {
  return try_([&] {
    const auto proj = cobras::pca_projection(*deref(ds, "dataset").data);
    require_len(out_len, proj.size() * 2);
    double* dst = &deref(out, "output buffer");
    for (const auto& p : proj) {
      *dst++ = p[0];
      *dst++ = p[1];
    }
  });
}

cobras_status cobras_dataset_make_folds(const cobras_dataset* ds, int repetitions, int folds,
                                        uint64_t seed, int* out, size_t out_len) {
  return try_([&] {
    const auto& d = *deref(ds, "dataset").data;
    const auto assignments = cobras::make_folds(d, repetitions, folds, seed);
    require_len(out_len, assignments.size() * d.size());
    int* dst = &deref(out, "output buffer");
    for (const auto& fa : assignments) dst = std::copy(fa.fold_of.begin(), fa.fold_of.end(), dst);
  });
}

cobras_status cobras_ari(const int* a, const int* b, size_t m, double* out) {
  return try_([&] {
    if (m > 0 && (a == nullptr || b == nullptr))
      throw cobras::Error(cobras::ErrorCode::InvalidArgument, "null partition");
    std::vector<int> va(a, a + m), vb(b, b + m);
    deref(out, "output") = cobras::ari(va, vb);
  });
}

cobras_status cobras_aligned_ranks(const double* scores, size_t algorithms, size_t tasks,
                                   double* out, size_t out_len) {
  return try_([&] {
    if (algorithms * tasks > 0 && scores == nullptr)
      throw cobras::Error(cobras::ErrorCode::InvalidArgument, "null scores");
    std::vector<std::vector<double>> m(algorithms);
    for (size_t a = 0; a < algorithms; ++a) m[a].assign(scores + a * tasks, scores + (a + 1) * tasks);
    const auto ranks = cobras::aligned_ranks(m);
    require_len(out_len, ranks.size());
    std::copy(ranks.begin(), ranks.end(), &deref(out, "output buffer"));
  });
}

cobras_status cobras_session_create(const cobras_dataset* ds,
                                    const cobras_session_options* options,
                                    cobras_session** out) {
  return try_([&] {
    const auto& data = deref(ds, "dataset").data;
    const auto& opt = deref(options, "options");
    cobras::EngineOptions eo;
    eo.budget = opt.budget;
    eo.seed = opt.seed;
    if (opt.train_mask != nullptr)
      for (size_t i = 0; i < data->size(); ++i) eo.train_mask.push_back(opt.train_mask[i] != 0);
    auto session = std::make_unique<cobras_session>();
    session->header.dataset = opt.dataset_path ? opt.dataset_path : "";
    if (opt.label_column) session->header.label_column = opt.label_column;
    session->header.oracle = opt.oracle ? opt.oracle : "labels";
    session->header.seed = opt.seed;
    session->header.budget = opt.budget;
    session->header.instances = data->size();
    session->header.train_mask = eo.train_mask;
    session->engine = std::make_unique<cobras::CobrasEngine>(data, std::move(eo));
    deref(out, "output") = session.release();
  });
}

void cobras_session_free(cobras_session* s) { delete s; }

cobras_status cobras_session_advance(cobras_session* s, cobras_step* out) {
  return try_([&] { deref(out, "output") = to_c(deref(s, "session").engine->advance()); });
}

cobras_status cobras_session_answer(cobras_session* s, size_t qnum, cobras_answer answer) {
  return try_([&] { deref(s, "session").engine->answer(qnum, from_c(answer)); });
}

cobras_status cobras_session_stop(cobras_session* s) {
  return try_([&] { deref(s, "session").engine->stop(); });
}

size_t cobras_session_answered(const cobras_session* s) {
  return s ? s->engine->answered() : 0;
}

size_t cobras_session_commit_count(const cobras_session* s) {
  return s ? s->engine->snapshots().size() : 0;
}

cobras_status cobras_session_snapshot(const cobras_session* s, int* out, size_t out_len,
                                      size_t* query_count) {
  return try_([&] {
    const auto& snap = deref(s, "session").engine->snapshot();
    require_len(out_len, snap.assignment.size());
    std::copy(snap.assignment.begin(), snap.assignment.end(), &deref(out, "output buffer"));
    if (query_count != nullptr) *query_count = snap.query_count;
  });
}

cobras_status cobras_session_label_answer(const cobras_session* s, size_t i, size_t j,
                                          cobras_answer* out) {
  return try_([&] {
    const auto& engine = *deref(s, "session").engine;
    cobras::LabelOracle oracle(engine.dataset(), engine.options().train_mask);
    deref(out, "output") = to_c(oracle.answer(i, j));
  });
}

cobras_status cobras_session_run_labels(cobras_session* s, cobras_step* out) {
  return try_([&] {
    auto& engine = *deref(s, "session").engine;
    cobras::LabelOracle oracle(engine.dataset(), engine.options().train_mask);
    const auto result = cobras::drive(engine, oracle);
    if (out != nullptr) *out = to_c(cobras::Step{cobras::Finished{result.reason}});
  });
}

cobras_status cobras_session_assignments_csv(const cobras_session* s, char** out) {
  return try_([&] {
    const auto& session = deref(s, "session");
    deref(out, "output") = dup_string(cobras::assignment_csv(session.engine->snapshot().assignment));
  });
}

cobras_status cobras_session_trace(const cobras_session* s, char** out) {
  return try_([&] {
    const auto& session = deref(s, "session");
    deref(out, "output") = dup_string(cobras::write_trace(session.header, *session.engine));
  });
}

cobras_status cobras_session_replay(const cobras_dataset* ds, const char* trace_json,
                                    cobras_session** out) {
  return try_([&] {
    const auto trace = cobras::parse_trace(cstr(trace_json, "trace"));
    auto session = std::make_unique<cobras_session>();
    session->header = trace.header;
    session->engine = cobras::replay(deref(ds, "dataset").data, trace);
    deref(out, "output") = session.release();
  });
}

cobras_status cobras_trace_header(const char* trace_json, char** dataset_path,
                                  char** label_column, uint64_t* seed, size_t* budget) {
  return try_([&] {
    const auto trace = cobras::parse_trace(cstr(trace_json, "trace"));
    if (dataset_path) *dataset_path = dup_string(trace.header.dataset);
    if (label_column)
      *label_column = trace.header.label_column ? dup_string(*trace.header.label_column) : nullptr;
    if (seed) *seed = trace.header.seed;
    if (budget) *budget = trace.header.budget;
  });
}

cobras_status cobras_benchmark_create(cobras_benchmark** out) {
  return try_([&] { deref(out, "output") = new cobras_benchmark(); });
}

void cobras_benchmark_free(cobras_benchmark* b) { delete b; }

cobras_status cobras_benchmark_add_task(cobras_benchmark* b, const char* name,
                                        const cobras_dataset* ds) {
  return try_([&] {
    const auto& data = deref(ds, "dataset").data;
    if (!data->has_labels())
      throw cobras::Error(cobras::ErrorCode::InvalidArgument, "benchmark tasks need labels");
    deref(b, "benchmark").tasks.push_back({cstr(name, "name"), data});
  });
}

cobras_status cobras_benchmark_add_algorithm(cobras_benchmark* b, const char* spec) {
  return try_([&] {
    deref(b, "benchmark").algorithms.push_back(cobras::AlgorithmSpec::parse(cstr(spec, "spec")));
  });
}

cobras_status cobras_benchmark_run(cobras_benchmark* b, const cobras_benchmark_options* options) {
  return try_([&] {
    auto& bench = deref(b, "benchmark");
    const auto& opt = deref(options, "options");
    cobras::BenchmarkOptions bo;
    bo.budget = opt.budget;
    bo.seed = opt.seed;
    bo.repetitions = opt.repetitions;
    bo.folds = opt.folds;
    bo.threads = opt.threads;
    bench.result = cobras::run_benchmark(bench.tasks, bench.algorithms, bo);
  });
}

size_t cobras_benchmark_failures(const cobras_benchmark* b) {
  return b && b->result ? b->result->failures() : 0;
}

size_t cobras_benchmark_cells(const cobras_benchmark* b) {
  return b && b->result ? b->result->cells.size() : 0;
}

cobras_status cobras_benchmark_mean_curve(const cobras_benchmark* b, size_t task,
                                          size_t algorithm, double* out, size_t out_len) {
  return try_([&] {
    const auto& r = result_of(b);
    if (task >= r.tasks.size() || algorithm >= r.algorithms.size())
      throw cobras::Error(cobras::ErrorCode::InvalidArgument, "task or algorithm out of range");
    const auto curve = r.mean_curve(task, algorithm);
    if (curve.empty())
      throw cobras::Error(cobras::ErrorCode::State, "every cell of this pair failed");
    require_len(out_len, curve.size());
    std::copy(curve.begin(), curve.end(), &deref(out, "output buffer"));
  });
}

cobras_status cobras_benchmark_aligned_ranks(const cobras_benchmark* b, size_t query_count,
                                             double* out, size_t out_len) {
  return try_([&] {
    const auto ranks = result_of(b).aligned_ranks_at(query_count);
    if (ranks.empty())
      throw cobras::Error(cobras::ErrorCode::State, "no complete task at this query count");
    require_len(out_len, ranks.size());
    std::copy(ranks.begin(), ranks.end(), &deref(out, "output buffer"));
  });
}

cobras_status cobras_benchmark_csv(const cobras_benchmark* b, char** out) {
  return try_([&] { deref(out, "output") = dup_string(result_of(b).to_csv()); });
}

cobras_status cobras_benchmark_json(const cobras_benchmark* b, char** out) {
  return try_([&] { deref(out, "output") = dup_string(result_of(b).to_json()); });
}

}  // extern "C"
