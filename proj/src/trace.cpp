#include "trace.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>

#include "error.hpp"

namespace cobras {

using ojson = nlohmann::ordered_json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string_view stream_name(Stream s) {
  switch (s) {
    case Stream::KMeans: return "kmeans";
    case Stream::HalfChoice: return "half-choice";
    case Stream::Folds: return "folds";
    case Stream::Cell: return "cell";
  }
  return "kmeans";
}

Answer parse_answer(const std::string& s) {
  if (s == "ML") return Answer::MustLink;
  if (s == "CL") return Answer::CannotLink;
  if (s == "DONT_KNOW") return Answer::DontKnow;
  throw Error(ErrorCode::Parse, "trace: unknown answer '" + s + "'");
}

EndReason parse_reason(const std::string& s) {
  if (s == "budget") return EndReason::Budget;
  if (s == "stopped") return EndReason::Stopped;
  if (s == "saturated") return EndReason::Saturated;
  throw Error(ErrorCode::Parse, "trace: unknown end reason '" + s + "'");
}

ojson event_json(const SessionEvent& e, const ActiveClusterer& session) {
  ojson j;
  switch (e.kind) {
    case EventKind::Query:
      j["type"] = "QUERY";
      j["qnum"] = e.qnum;
      j["i"] = e.i;
      j["j"] = e.j;
      j["phase"] = to_string(e.phase);
      break;
    case EventKind::Answer:
      j["type"] = "ANSWER";
      j["qnum"] = e.qnum;
      j["i"] = e.i;
      j["j"] = e.j;
      j["value"] = to_string(e.answer);
      break;
    case EventKind::Derived:
      j["type"] = "ANSWER";
      j["value"] = "derived";
      j["relation"] = to_string(e.relation);
      j["i"] = e.i;
      j["j"] = e.j;
      j["phase"] = to_string(e.phase);
      break;
    case EventKind::Snapshot: {
      const Snapshot& s = session.snapshots().at(e.snapshot);
      j["type"] = "SNAPSHOT";
      j["query_count"] = s.query_count;
      j["merge_complete"] = s.merge_complete;
      j["assignment"] = s.assignment;
      break;
    }
    case EventKind::RngDraw:
      j["type"] = "RNG_DRAW";
      j["stream"] = stream_name(e.stream);
      j["value"] = hex64(e.value);
      break;
    case EventKind::End:
      j["type"] = "END";
      j["reason"] = to_string(e.reason);
      break;
  }
  return j;
}

}  // namespace

std::string write_trace(const TraceHeader& header, const ActiveClusterer& session) {
  ojson h;
  h["dataset"] = header.dataset;
  if (header.label_column) h["label_column"] = *header.label_column;
  h["seed"] = header.seed;
  h["budget"] = header.budget;
  h["algorithm"] = header.algorithm;
  h["oracle"] = header.oracle;
  h["version"] = header.version;
  h["instances"] = header.instances;
  if (!header.train_mask.empty()) {
    std::vector<int> mask(header.train_mask.begin(), header.train_mask.end());
    h["train_mask"] = mask;
  }

  std::ostringstream out;
  out << "{\n\"header\": " << h.dump() << ",\n\"events\": [";
  const auto& events = session.events();
  for (std::size_t k = 0; k < events.size(); ++k)
    out << (k == 0 ? "\n" : ",\n") << event_json(events[k], session).dump();
  out << "\n]\n}\n";
  return out.str();
}

Trace parse_trace(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("trace is not valid JSON: ") + e.what());
  }
  Trace t;
  try {
    const ojson& h = doc.at("header");
    t.header.dataset = h.at("dataset").get<std::string>();
    if (h.contains("label_column")) t.header.label_column = h["label_column"].get<std::string>();
    t.header.seed = h.at("seed").get<std::uint64_t>();
    t.header.budget = h.at("budget").get<std::size_t>();
    t.header.algorithm = h.value("algorithm", std::string("cobras"));
    t.header.oracle = h.value("oracle", std::string("labels"));
    t.header.version = h.value("version", std::string(kVersion));
    t.header.instances = h.at("instances").get<std::size_t>();
    if (h.contains("train_mask"))
      for (int v : h["train_mask"].get<std::vector<int>>()) t.header.train_mask.push_back(v != 0);

    for (const ojson& e : doc.at("events")) {
      const std::string type = e.at("type").get<std::string>();
      if (type == "ANSWER" && e.contains("qnum")) {
        TraceAnswer a;
        a.qnum = e.at("qnum").get<std::size_t>();
        a.i = e.at("i").get<Index>();
        a.j = e.at("j").get<Index>();
        a.value = parse_answer(e.at("value").get<std::string>());
        if (a.qnum != t.answers.size() + 1)
          throw Error(ErrorCode::Parse, "trace: answers are not in query order");
        t.answers.push_back(a);
      } else if (type == "SNAPSHOT") {
        t.final_assignment = e.at("assignment").get<std::vector<int>>();
      } else if (type == "END") {
        t.end = parse_reason(e.at("reason").get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed trace: ") + e.what());
  }
  return t;
}

std::string assignment_csv(const std::vector<int>& assignment) {
  std::string out = "instance_id,cluster_id\n";
  for (std::size_t i = 0; i < assignment.size(); ++i)
    out += std::to_string(i) + ',' + std::to_string(assignment[i]) + '\n';
  return out;
}

std::unique_ptr<CobrasEngine> replay(std::shared_ptr<const Dataset> ds, const Trace& trace) {
  if (trace.header.algorithm != "cobras")
    throw Error(ErrorCode::InvalidArgument,
                "only cobras traces can be replayed, got '" + trace.header.algorithm + "'");
  if (!ds || ds->size() != trace.header.instances)
    throw Error(ErrorCode::InvalidArgument, "dataset does not match the trace (instance count)");
  EngineOptions options;
  options.budget = trace.header.budget;
  options.seed = trace.header.seed;
  options.train_mask = trace.header.train_mask;
  auto engine = std::make_unique<CobrasEngine>(std::move(ds), std::move(options));

  std::size_t next = 0;
  for (;;) {
    Step s = engine->advance();
    if (auto* f = std::get_if<Finished>(&s)) {
      if (next != trace.answers.size() || (trace.end && *trace.end != f->reason))
        throw Error(ErrorCode::State, "replay ended differently from the trace");
      return engine;
    }
    const auto& q = std::get<PendingQuery>(s);
    if (next == trace.answers.size()) {
      if (trace.end == EndReason::Stopped) {
        engine->stop();
        return engine;
      }
      if (trace.end)
        throw Error(ErrorCode::State, "replay asks query " + std::to_string(q.qnum) +
                                          " beyond the end of the trace");
      return engine;  // paused, waiting for the next answer
    }
    const TraceAnswer& a = trace.answers[next];
    if (a.qnum != q.qnum || make_pair_key(a.i, a.j) != make_pair_key(q.i, q.j))
      throw Error(ErrorCode::State, "replay diverged at query " + std::to_string(q.qnum));
    engine->answer(q.qnum, a.value);
    ++next;
  }
}

}  // namespace cobras
