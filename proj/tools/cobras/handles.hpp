#pragma once

// Thin RAII layer over the C API. The tool links nothing but libcobras.

#include <cobras/cobras.h>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace cobras_cli {

class ApiError : public std::runtime_error {
 public:
  ApiError(cobras_status status, const std::string& what)
      : std::runtime_error(what), status_(status) {}
  cobras_status status() const noexcept { return status_; }

 private:
  cobras_status status_;
};

inline void check(cobras_status s, const char* context) {
  if (s != COBRAS_OK)
    throw ApiError(s, std::string(context) + ": " + cobras_last_error());
}

struct DatasetFree {
  void operator()(cobras_dataset* d) const { cobras_dataset_free(d); }
};
struct SessionFree {
  void operator()(cobras_session* s) const { cobras_session_free(s); }
};
struct BenchmarkFree {
  void operator()(cobras_benchmark* b) const { cobras_benchmark_free(b); }
};

using DatasetPtr = std::unique_ptr<cobras_dataset, DatasetFree>;
using SessionPtr = std::unique_ptr<cobras_session, SessionFree>;
using BenchmarkPtr = std::unique_ptr<cobras_benchmark, BenchmarkFree>;

inline std::string take_string(char* s) {
  std::string out = s ? s : "";
  cobras_string_free(s);
  return out;
}

// Loads a CSV, drops duplicate rows and min-max normalizes, as every command does.
inline DatasetPtr load_prepared(const std::string& path, const std::string& label_column) {
  cobras_dataset* raw = nullptr;
  check(cobras_dataset_load_csv(path.c_str(), label_column.empty() ? nullptr : label_column.c_str(),
                                &raw),
        "loading dataset");
  DatasetPtr owned_raw(raw);
  cobras_dataset* dedup = nullptr;
  check(cobras_dataset_deduplicate(raw, &dedup), "deduplicating");
  DatasetPtr owned_dedup(dedup);
  cobras_dataset* norm = nullptr;
  check(cobras_dataset_normalize(dedup, &norm), "normalizing");
  return DatasetPtr(norm);
}

inline std::vector<double> row(const cobras_dataset* ds, std::size_t i) {
  std::vector<double> out(cobras_dataset_dim(ds));
  check(cobras_dataset_row(ds, i, out.data(), out.size()), "reading row");
  return out;
}

inline std::vector<double> projection(const cobras_dataset* ds) {
  std::vector<double> out(cobras_dataset_size(ds) * 2);
  check(cobras_dataset_projection(ds, out.data(), out.size()), "projecting");
  return out;
}

inline std::vector<int> snapshot(const cobras_session* s, std::size_t n, std::size_t* query_count) {
  std::vector<int> out(n);
  check(cobras_session_snapshot(s, out.data(), out.size(), query_count), "reading clustering");
  return out;
}

inline std::string trace(const cobras_session* s) {
  char* out = nullptr;
  check(cobras_session_trace(s, &out), "writing trace");
  return take_string(out);
}

inline std::string assignments_csv(const cobras_session* s) {
  char* out = nullptr;
  check(cobras_session_assignments_csv(s, &out), "writing assignments");
  return take_string(out);
}

inline const char* phase_name(cobras_phase p) {
  return p == COBRAS_PHASE_SPLIT_LEVEL ? "split-level" : "merge";
}

inline const char* reason_name(cobras_end_reason r) {
  switch (r) {
    case COBRAS_END_BUDGET: return "budget";
    case COBRAS_END_STOPPED: return "stopped";
    case COBRAS_END_SATURATED: return "saturated";
  }
  return "budget";
}

}  // namespace cobras_cli
