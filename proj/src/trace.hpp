#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "engine.hpp"

namespace cobras {

inline constexpr const char* kVersion = "1.0.0";

struct TraceHeader {
  std::string dataset;
  std::optional<std::string> label_column;
  std::uint64_t seed = 0;
  std::size_t budget = 0;
  std::string algorithm = "cobras";
  std::string oracle = "labels";
  std::string version = kVersion;
  std::size_t instances = 0;
  std::vector<bool> train_mask;  // empty: every instance is a training instance
};

struct TraceAnswer {
  std::size_t qnum = 0;
  Index i = 0;
  Index j = 0;
  Answer value = Answer::DontKnow;
};

struct Trace {
  TraceHeader header;
  std::vector<TraceAnswer> answers;        // in qnum order
  std::optional<EndReason> end;            // unset for a session still in progress
  std::vector<int> final_assignment;       // last SNAPSHOT in the trace
};

/// Serializes the session as a JSON document: a header object followed by an
/// events array with one compact event per line. Output is byte-deterministic.
std::string write_trace(const TraceHeader& header, const ActiveClusterer& session);

Trace parse_trace(const std::string& text);

// `instance_id,cluster_id` rows for a committed assignment.
std::string assignment_csv(const std::vector<int>& assignment);

/// Rebuilds a COBRAS session by feeding it the recorded answers. Throws if
/// the engine asks a different pair than the trace recorded. A trace without
/// an END event leaves the session paused at its next query.
std::unique_ptr<CobrasEngine> replay(std::shared_ptr<const Dataset> ds, const Trace& trace);

}  // namespace cobras
