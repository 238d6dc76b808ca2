#include "server.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cctype>
#include <cstdio>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <vector>

#include "handles.hpp"

namespace cobras_cli {

using json = nlohmann::ordered_json;

namespace {

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c))) return false;
  return true;
}

std::string new_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, json{{"error", message}});
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_atomically(const std::filesystem::path& p, const std::string& content) {
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

}  // namespace

struct Shared {
  DatasetPtr data;
  std::vector<double> proj;
  std::size_t n = 0;
};

struct Live {
  std::string id;
  std::mutex m;
  std::condition_variable cv;
  SessionPtr session;
  std::size_t budget = 0;
  std::vector<json> messages;
  std::size_t commits_seen = 0;
  bool done = false;
  std::string reason;
};

struct SessionServer::Impl {
  ServerConfig config;
  Shared shared;
  httplib::Server http;
  std::mutex sessions_m;
  std::map<std::string, std::shared_ptr<Live>> sessions;
  std::atomic<bool> stopping{false};

  explicit Impl(ServerConfig c) : config(std::move(c)) {
    shared.data = load_prepared(config.data_path, config.label_column);
    shared.n = cobras_dataset_size(shared.data.get());
    shared.proj = projection(shared.data.get());
    std::filesystem::create_directories(config.session_dir);
    // SO_REUSEPORT (httplib's default) would let a second server share a
    // busy port silently; a taken port has to be an error.
    http.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    routes();
  }

  json point(std::size_t i) const { return json::array({shared.proj[2 * i], shared.proj[2 * i + 1]}); }

  // Emits whatever changed since the last call: the newest clustering if a
  // commit happened, then the next query or the end of the run.
  void pump(Live& s) {
    const std::size_t commits = cobras_session_commit_count(s.session.get());
    if (commits != s.commits_seen) {
      s.commits_seen = commits;
      std::size_t qc = 0;
      auto assignment = snapshot(s.session.get(), shared.n, &qc);
      json all = json::array();
      for (std::size_t i = 0; i < shared.n; ++i) all.push_back(point(i));
      s.messages.push_back(json{{"type", "clustering"},
                                {"query_count", qc},
                                {"assignment", assignment},
                                {"proj", std::move(all)}});
    }
    if (s.done) return;
    cobras_step step{};
    check(cobras_session_advance(s.session.get(), &step), "advancing session");
    // advancing may itself commit (for instance when the run saturates)
    if (cobras_session_commit_count(s.session.get()) != s.commits_seen) return pump(s);
    if (step.kind == COBRAS_STEP_QUERY) {
      s.messages.push_back(json{{"type", "query"},
                                {"qnum", step.qnum},
                                {"i", step.i},
                                {"j", step.j},
                                {"i_features", row(shared.data.get(), step.i)},
                                {"j_features", row(shared.data.get(), step.j)},
                                {"proj", {{"i", point(step.i)}, {"j", point(step.j)}}},
                                {"phase", phase_name(step.phase)}});
    } else {
      s.done = true;
      s.reason = reason_name(step.reason);
      s.messages.push_back(json{{"type", "done"}, {"reason", s.reason}});
    }
  }

  void persist(Live& s) {
    write_atomically(config.session_dir / (s.id + ".json"), trace(s.session.get()));
  }

  std::shared_ptr<Live> create(std::size_t budget, std::uint64_t seed) {
    auto s = std::make_shared<Live>();
    s->id = new_id();
    s->budget = budget;
    cobras_session_options opt{};
    opt.budget = budget;
    opt.seed = seed;
    opt.dataset_path = config.data_path.c_str();
    opt.label_column = config.label_column.empty() ? nullptr : config.label_column.c_str();
    opt.oracle = "interactive";
    cobras_session* raw = nullptr;
    check(cobras_session_create(shared.data.get(), &opt, &raw), "creating session");
    s->session.reset(raw);
    std::lock_guard lock(s->m);
    pump(*s);
    persist(*s);
    return s;
  }

  // Rebuilds a session from its saved trace.
  std::shared_ptr<Live> restore(const std::string& id) {
    const auto path = config.session_dir / (id + ".json");
    if (!std::filesystem::exists(path)) return nullptr;
    const std::string text = read_file(path);
    char* dataset = nullptr;
    char* label = nullptr;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    check(cobras_trace_header(text.c_str(), &dataset, &label, &seed, &budget), "reading trace");
    const std::string dataset_path = take_string(dataset);
    const std::string label_column = take_string(label);
    DatasetPtr own;
    const cobras_dataset* ds = shared.data.get();
    if (dataset_path != config.data_path || label_column != config.label_column) {
      own = load_prepared(dataset_path, label_column);
      if (cobras_dataset_size(own.get()) != shared.n)
        throw std::runtime_error("session " + id + " belongs to a different dataset");
      ds = own.get();
    }
    cobras_session* raw = nullptr;
    check(cobras_session_replay(ds, text.c_str(), &raw), "replaying session");
    auto s = std::make_shared<Live>();
    s->id = id;
    s->budget = budget;
    s->session.reset(raw);
    std::lock_guard lock(s->m);
    pump(*s);
    return s;
  }

  std::shared_ptr<Live> find(const std::string& id) {
    if (!valid_id(id)) return nullptr;
    std::lock_guard lock(sessions_m);
    if (auto it = sessions.find(id); it != sessions.end()) return it->second;
    auto s = restore(id);
    if (s) sessions.emplace(id, s);
    return s;
  }

  void routes() {
    http.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                  std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        fail(res, 500, e.what());
      } catch (...) {
        fail(res, 500, "unknown error");
      }
    });

    http.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      std::size_t budget = config.budget;
      std::uint64_t seed = config.seed;
      if (!req.body.empty()) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) return fail(res, 400, "body is not a JSON object");
        if (body.contains("budget")) {
          if (!body["budget"].is_number_unsigned()) return fail(res, 400, "budget must be a non-negative integer");
          budget = body["budget"].get<std::size_t>();
        }
        if (body.contains("seed")) {
          if (!body["seed"].is_number_unsigned()) return fail(res, 400, "seed must be a non-negative integer");
          seed = body["seed"].get<std::uint64_t>();
        }
      }
      auto s = create(budget, seed);
      {
        std::lock_guard lock(sessions_m);
        sessions.emplace(s->id, s);
      }
      reply(res, 201, json{{"session_id", s->id},
                           {"budget", budget},
                           {"seed", seed},
                           {"instances", shared.n}});
    });

    http.Get(R"(/api/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return fail(res, 404, "unknown session");
      std::lock_guard lock(s->m);
      json body{{"session_id", s->id},
                {"budget", s->budget},
                {"answered", cobras_session_answered(s->session.get())},
                {"messages", s->messages.size()},
                {"done", s->done}};
      if (s->done) body["reason"] = s->reason;
      reply(res, 200, body);
    });

    http.Get(R"(/api/sessions/([^/]+)/messages)",
             [this](const httplib::Request& req, httplib::Response& res) {
               auto s = find(req.matches[1]);
               if (!s) return fail(res, 404, "unknown session");
               std::size_t after = 0;
               auto timeout = config.poll_timeout;
               try {
                 if (req.has_param("after")) after = std::stoul(req.get_param_value("after"));
                 if (req.has_param("timeout_ms"))
                   timeout = std::min(timeout, std::chrono::milliseconds(
                                                   std::stoul(req.get_param_value("timeout_ms"))));
               } catch (const std::exception&) {
                 return fail(res, 400, "after and timeout_ms must be non-negative integers");
               }
               std::unique_lock lock(s->m);
               s->cv.wait_for(lock, timeout,
                              [&] { return s->messages.size() > after || stopping.load(); });
               json list = json::array();
               for (std::size_t k = after; k < s->messages.size(); ++k) {
                 json m = s->messages[k];
                 m["seq"] = k;
                 list.push_back(std::move(m));
               }
               reply(res, 200, json{{"messages", std::move(list)}, {"next", s->messages.size()}});
             });

    http.Post(R"(/api/sessions/([^/]+)/messages)",
              [this](const httplib::Request& req, httplib::Response& res) {
                auto s = find(req.matches[1]);
                if (!s) return fail(res, 404, "unknown session");
                json body = json::parse(req.body, nullptr, false);
                if (body.is_discarded() || !body.is_object() || !body.contains("type"))
                  return fail(res, 400, "expected a JSON message with a type");
                const std::string type = body.value("type", "");
                std::lock_guard lock(s->m);
                if (s->done) return fail(res, 409, "session has ended");
                if (type == "stop") {
                  check(cobras_session_stop(s->session.get()), "stopping");
                } else if (type == "answer") {
                  if (!body.contains("qnum") || !body["qnum"].is_number_unsigned())
                    return fail(res, 400, "answer needs an integer qnum");
                  const std::string value = body.value("value", "");
                  cobras_answer a;
                  if (value == "ML")
                    a = COBRAS_MUST_LINK;
                  else if (value == "CL")
                    a = COBRAS_CANNOT_LINK;
                  else if (value == "DONT_KNOW")
                    a = COBRAS_DONT_KNOW;
                  else
                    return fail(res, 400, "value must be ML, CL or DONT_KNOW");
                  const cobras_status st =
                      cobras_session_answer(s->session.get(), body["qnum"].get<std::size_t>(), a);
                  if (st == COBRAS_ERR_STATE) return fail(res, 409, cobras_last_error());
                  check(st, "answering");
                } else {
                  return fail(res, 400, "unknown message type '" + type + "'");
                }
                pump(*s);
                persist(*s);
                s->cv.notify_all();
                reply(res, 200, json{{"ok", true}, {"next", s->messages.size()}});
              });

    http.Get(R"(/api/sessions/([^/]+)/trace)",
             [this](const httplib::Request& req, httplib::Response& res) {
               auto s = find(req.matches[1]);
               if (!s) return fail(res, 404, "unknown session");
               std::lock_guard lock(s->m);
               res.set_content(trace(s->session.get()), "application/json");
             });
  }
};

SessionServer::SessionServer(ServerConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

SessionServer::~SessionServer() { stop(); }

int SessionServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool SessionServer::listen() { return impl_->http.listen_after_bind(); }

void SessionServer::stop() {
  impl_->stopping = true;
  {
    std::lock_guard lock(impl_->sessions_m);
    for (auto& [id, s] : impl_->sessions) {
      std::lock_guard l(s->m);
      s->cv.notify_all();
    }
  }
  impl_->http.stop();
}

void SessionServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace cobras_cli
