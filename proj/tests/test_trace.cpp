#include <gtest/gtest.h>

#include <json.hpp>

#include <sstream>

#include "error.hpp"
#include "support.hpp"
#include "trace.hpp"

using namespace cobras;

namespace {

struct Recorded {
  std::shared_ptr<const Dataset> ds;
  TraceHeader header;
  std::unique_ptr<CobrasEngine> engine;
  std::string text;
};

Recorded record(std::size_t budget, std::uint64_t seed, std::vector<bool> train = {}) {
  Recorded r;
  r.ds = fixtures::share(fixtures::three_blobs(seed + 1));
  r.header.dataset = "blobs.csv";
  r.header.seed = seed;
  r.header.budget = budget;
  r.header.instances = r.ds->size();
  r.header.train_mask = train;
  r.engine = std::make_unique<CobrasEngine>(r.ds, EngineOptions{budget, seed, train});
  LabelOracle oracle(*r.ds, train);
  drive(*r.engine, oracle);
  r.text = write_trace(r.header, *r.engine);
  return r;
}

}  // namespace

TEST(Trace, OneEventPerLine) {
  auto r = record(25, 1);
  std::istringstream in(r.text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "{");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("\"header\": {", 0), 0u);
  std::size_t events = 0, queries = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] != '{') continue;
    auto e = nlohmann::json::parse(line.back() == ',' ? line.substr(0, line.size() - 1) : line);
    ++events;
    if (e["type"] == "QUERY") ++queries;
  }
  EXPECT_EQ(events, r.engine->events().size());
  EXPECT_EQ(queries, r.engine->answered());
  EXPECT_NE(r.text.find("\"type\":\"RNG_DRAW\""), std::string::npos);
  EXPECT_NE(r.text.find("\"type\":\"END\",\"reason\":\"budget\""), std::string::npos);
}

TEST(Trace, ParseRoundTrip) {
  auto r = record(30, 2);
  Trace t = parse_trace(r.text);
  EXPECT_EQ(t.header.dataset, "blobs.csv");
  EXPECT_EQ(t.header.seed, 2u);
  EXPECT_EQ(t.header.budget, 30u);
  EXPECT_EQ(t.answers.size(), r.engine->answered());
  EXPECT_EQ(t.end, EndReason::Budget);
  EXPECT_EQ(t.final_assignment, r.engine->snapshot().assignment);
  const auto& tr = r.engine->store().transcript();
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_EQ(t.answers[k].qnum, k + 1);
    EXPECT_EQ(t.answers[k].value, tr[k].answer);
  }
}

TEST(Trace, ReplayReproducesAssignmentAndTrace) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<bool> train;
    if (seed % 2) {
      train.assign(150, true);
      for (Index i = 0; i < 150; i += 7) train[i] = false;
    }
    auto r = record(10 + 10 * seed, seed, train);
    auto replayed = replay(r.ds, parse_trace(r.text));
    EXPECT_EQ(assignment_csv(replayed->snapshot().assignment),
              assignment_csv(r.engine->snapshot().assignment));
    EXPECT_EQ(write_trace(r.header, *replayed), r.text);
  }
}

TEST(Trace, ReplayDetectsDivergence) {
  auto r = record(20, 3);
  auto doc = nlohmann::ordered_json::parse(r.text);
  for (auto& e : doc["events"])
    if (e["type"] == "ANSWER" && e.contains("qnum") && e["qnum"] == 4) {
      e["i"] = 149;
      e["j"] = 148;
    }
  try {
    replay(r.ds, parse_trace(doc.dump()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::State);
  }
  EXPECT_THROW(replay(fixtures::share(Dataset({0, 1}, 1)), parse_trace(r.text)), Error);
}

TEST(Trace, PausedSessionResumes) {
  auto ds = fixtures::share(fixtures::three_blobs(5));
  TraceHeader h;
  h.dataset = "blobs.csv";
  h.budget = 30;
  h.seed = 4;
  h.instances = 150;
  CobrasEngine live(ds, {30, 4, {}});
  for (int k = 0; k < 6; ++k) {
    auto q = std::get<PendingQuery>(live.advance());
    live.answer(q.qnum, ds->label(q.i) == ds->label(q.j) ? Answer::MustLink : Answer::CannotLink);
  }
  auto pending = std::get<PendingQuery>(live.advance());
  Trace t = parse_trace(write_trace(h, live));
  EXPECT_FALSE(t.end);
  auto resumed = replay(ds, t);
  EXPECT_FALSE(resumed->done());
  EXPECT_EQ(std::get<PendingQuery>(resumed->advance()), pending);
}

TEST(Trace, StoppedSessionReplaysAsStopped) {
  auto ds = fixtures::share(fixtures::three_blobs(6));
  TraceHeader h;
  h.dataset = "blobs.csv";
  h.budget = 30;
  h.instances = 150;
  CobrasEngine live(ds, {30, 0, {}});
  auto q = std::get<PendingQuery>(live.advance());
  live.answer(q.qnum, Answer::DontKnow);
  live.advance();
  live.stop();
  auto resumed = replay(ds, parse_trace(write_trace(h, live)));
  EXPECT_EQ(resumed->end_reason(), EndReason::Stopped);
  EXPECT_EQ(resumed->snapshot().assignment, live.snapshot().assignment);
}

TEST(Trace, RejectsMalformedInput) {
  for (const char* bad : {"", "{", "{\"events\": []}", "[1,2]",
                          "{\"header\":{\"dataset\":\"x\",\"seed\":0,\"budget\":1,\"instances\":2},"
                          "\"events\":[{\"type\":\"ANSWER\",\"qnum\":2,\"i\":0,\"j\":1,\"value\":\"ML\"}]}"}) {
    try {
      parse_trace(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Parse) << bad;
    }
  }
}

TEST(AssignmentCsv, Format) {
  EXPECT_EQ(assignment_csv({0, 1, 0}), "instance_id,cluster_id\n0,0\n1,1\n2,0\n");
}
