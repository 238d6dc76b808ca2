#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "handles.hpp"
#include "plots.hpp"
#include "server.hpp"

using namespace cobras_cli;
namespace fs = std::filesystem;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("cobras");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("COBRAS_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    // from_str maps unknown names to off; only accept "off" when it was asked for
    if (parsed != spdlog::level::off || std::string(level) == "off")
      spdlog::set_level(parsed);
    else
      spdlog::warn("COBRAS_LOG: unknown level '{}', using warn", level);
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) throw std::runtime_error("cannot write " + path);
}

std::size_t cluster_count(const std::vector<int>& assignment) {
  int top = -1;
  for (int c : assignment) top = std::max(top, c);
  return static_cast<std::size_t>(top + 1);
}

std::string format_features(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.4g", k ? " " : "", v[k]);
    out += buf;
  }
  return out;
}

// Reads one answer per query from stdin. End of input stops the session.
std::optional<cobras_answer> ask_user(const cobras_dataset* ds, const cobras_step& q) {
  std::cerr << "query " << q.qnum << " (" << phase_name(q.phase) << "): instance " << q.i
            << " vs " << q.j << "\n  " << q.i << ": " << format_features(row(ds, q.i)) << "\n  "
            << q.j << ": " << format_features(row(ds, q.j)) << "\n";
  for (;;) {
    std::cerr << "same cluster? [y]es / [n]o / [d]on't know / [s]top: " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) return std::nullopt;
    std::string a;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) a += static_cast<char>(std::tolower(c));
    if (a == "y" || a == "yes" || a == "ml") return COBRAS_MUST_LINK;
    if (a == "n" || a == "no" || a == "cl") return COBRAS_CANNOT_LINK;
    if (a == "d" || a == "dk" || a == "?") return COBRAS_DONT_KNOW;
    if (a == "s" || a == "stop") return std::nullopt;
  }
}

struct RunArgs {
  std::string data, label_column, oracle = "labels", trace, assignments;
  std::size_t budget = 100;
  std::uint64_t seed = 0;
};

int cmd_run(const RunArgs& a) {
  DatasetPtr ds = load_prepared(a.data, a.label_column);
  const std::size_t n = cobras_dataset_size(ds.get());
  spdlog::info("{}: {} unique instances, {} features", a.data, n, cobras_dataset_dim(ds.get()));
  if (a.oracle == "labels" && !cobras_dataset_has_labels(ds.get()))
    throw std::runtime_error("the label oracle needs a label column (see --label-column)");

  cobras_session_options opt{};
  opt.budget = a.budget;
  opt.seed = a.seed;
  opt.dataset_path = a.data.c_str();
  opt.label_column = a.label_column.empty() ? nullptr : a.label_column.c_str();
  opt.oracle = a.oracle.c_str();
  cobras_session* raw = nullptr;
  check(cobras_session_create(ds.get(), &opt, &raw), "creating session");
  SessionPtr session(raw);

  cobras_step step{};
  for (;;) {
    check(cobras_session_advance(session.get(), &step), "advancing");
    if (step.kind == COBRAS_STEP_DONE) break;
    cobras_answer answer;
    if (a.oracle == "labels") {
      check(cobras_session_label_answer(session.get(), step.i, step.j, &answer), "label oracle");
    } else {
      auto given = ask_user(ds.get(), step);
      if (!given) {
        check(cobras_session_stop(session.get()), "stopping");
        continue;
      }
      answer = *given;
    }
    spdlog::debug("query {} ({}, {}) -> {}", step.qnum, step.i, step.j, static_cast<int>(answer));
    check(cobras_session_answer(session.get(), step.qnum, answer), "answering");
  }

  std::size_t qc = 0;
  const auto assignment = snapshot(session.get(), n, &qc);
  if (!a.trace.empty()) write_file(a.trace, trace(session.get()));
  if (!a.assignments.empty()) write_file(a.assignments, assignments_csv(session.get()));
  std::cout << "answered " << cobras_session_answered(session.get()) << " queries, "
            << cluster_count(assignment) << " clusters (committed at query " << qc
            << "), ended: " << reason_name(step.reason) << "\n";
  return 0;
}

struct ReplayArgs {
  std::string trace, data, label_column, assignments, trace_out;
};

int cmd_replay(const ReplayArgs& a) {
  const std::string text = slurp(a.trace);
  char* path = nullptr;
  char* label = nullptr;
  check(cobras_trace_header(text.c_str(), &path, &label, nullptr, nullptr), "reading trace");
  std::string data = take_string(path);
  std::string label_column = take_string(label);
  if (!a.data.empty()) data = a.data;
  if (!a.label_column.empty()) label_column = a.label_column;
  if (data.empty()) throw std::runtime_error("trace names no dataset; pass --data");

  DatasetPtr ds = load_prepared(data, label_column);
  cobras_session* raw = nullptr;
  check(cobras_session_replay(ds.get(), text.c_str(), &raw), "replaying");
  SessionPtr session(raw);
  const std::string replayed = trace(session.get());
  if (!a.assignments.empty()) write_file(a.assignments, assignments_csv(session.get()));
  if (!a.trace_out.empty()) write_file(a.trace_out, replayed);
  std::size_t qc = 0;
  const auto assignment = snapshot(session.get(), cobras_dataset_size(ds.get()), &qc);
  std::cout << "replayed " << cobras_session_answered(session.get()) << " answers, "
            << cluster_count(assignment) << " clusters"
            << (replayed == text ? ", trace identical" : ", trace differs in formatting") << "\n";
  return 0;
}

struct BenchmarkArgs {
  std::string tasks, algorithms = "cobras,cobra:10,cobra:25,cobra:50", csv, json, plot_dir;
  std::size_t budget = 100;
  std::uint64_t seed = 0;
  int repetitions = 10, folds = 10;
  unsigned threads = 1;
};

struct TaskLine {
  std::string name, path, label_column;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t k = 0;
  while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
  return s.substr(k);
}

// name,path[,label_column] with a header row; relative paths are resolved
// against the task file's directory.
std::vector<TaskLine> read_tasks(const std::string& file) {
  std::istringstream in(slurp(file));
  std::string line;
  std::vector<TaskLine> tasks;
  bool header = true;
  const fs::path base = fs::path(file).parent_path();
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto f = split(line, ',');
    for (auto& x : f) x = trim(x);
    if (header) {
      header = false;
      if (f.size() >= 2 && f[0] == "name" && f[1] == "path") continue;
    }
    if (f.size() < 2 || f.size() > 3 || f[0].empty() || f[1].empty())
      throw std::runtime_error(file + ": expected name,path[,label_column] but got '" + line + "'");
    fs::path p = f[1];
    if (p.is_relative()) p = base / p;
    tasks.push_back({f[0], p.string(), f.size() == 3 ? f[2] : ""});
  }
  return tasks;
}

int cmd_benchmark(const BenchmarkArgs& a) {
  const auto lines = read_tasks(a.tasks);
  if (lines.empty()) throw std::runtime_error(a.tasks + ": the task list is empty");

  cobras_benchmark* raw = nullptr;
  check(cobras_benchmark_create(&raw), "creating benchmark");
  BenchmarkPtr bench(raw);
  std::vector<std::string> task_names;
  for (const auto& t : lines) {
    try {
      DatasetPtr ds = load_prepared(t.path, t.label_column);
      check(cobras_benchmark_add_task(bench.get(), t.name.c_str(), ds.get()), "adding task");
      task_names.push_back(t.name);
    } catch (const std::exception& e) {
      spdlog::error("task {} skipped: {}", t.name, e.what());
    }
  }
  if (task_names.empty()) throw std::runtime_error("no task could be loaded");
  std::vector<std::string> algorithms;
  for (auto& s : split(a.algorithms, ',')) {
    s = trim(s);
    if (s.empty()) continue;
    check(cobras_benchmark_add_algorithm(bench.get(), s.c_str()), "adding algorithm");
    algorithms.push_back(s);
  }
  if (algorithms.empty()) throw std::runtime_error("no algorithms given");

  cobras_benchmark_options opt{a.budget, a.seed, a.repetitions, a.folds, a.threads};
  check(cobras_benchmark_run(bench.get(), &opt), "running benchmark");
  const std::size_t cells = cobras_benchmark_cells(bench.get());
  const std::size_t failures = cobras_benchmark_failures(bench.get());
  if (failures > 0) spdlog::error("{} of {} cells failed (listed in the JSON output)", failures, cells);

  char* text = nullptr;
  if (!a.csv.empty()) {
    check(cobras_benchmark_csv(bench.get(), &text), "writing csv");
    write_file(a.csv, take_string(text));
  }
  if (!a.json.empty()) {
    check(cobras_benchmark_json(bench.get(), &text), "writing json");
    write_file(a.json, take_string(text));
  }

  std::vector<std::vector<std::vector<double>>> curves(task_names.size());
  for (std::size_t t = 0; t < task_names.size(); ++t)
    for (std::size_t k = 0; k < algorithms.size(); ++k) {
      std::vector<double> c(a.budget + 1);
      if (cobras_benchmark_mean_curve(bench.get(), t, k, c.data(), c.size()) != COBRAS_OK) c.clear();
      curves[t].push_back(std::move(c));
    }

  std::cout << "task";
  for (const auto& name : algorithms) std::cout << '\t' << name;
  std::cout << "\t(mean test ARI at " << a.budget << " queries)\n";
  for (std::size_t t = 0; t < task_names.size(); ++t) {
    std::cout << task_names[t];
    for (const auto& c : curves[t]) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "\t%.3f", c.empty() ? std::nan("") : c.back());
      std::cout << buf;
    }
    std::cout << '\n';
  }

  if (!a.plot_dir.empty()) {
    fs::create_directories(a.plot_dir);
    for (std::size_t t = 0; t < task_names.size(); ++t) {
      std::vector<Series> series;
      double lo = 0.0;
      for (std::size_t k = 0; k < algorithms.size(); ++k) {
        if (curves[t][k].empty()) continue;
        for (double v : curves[t][k]) lo = std::min(lo, v);
        series.push_back({algorithms[k], curves[t][k]});
      }
      ChartSpec spec{task_names[t] + ": mean test ARI", "queries", "ARI", lo, 1.0, false};
      write_file((fs::path(a.plot_dir) / (task_names[t] + "_ari.svg")).string(),
                 line_chart_svg(spec, series));
    }
    std::vector<Series> ranks(algorithms.size());
    for (std::size_t k = 0; k < algorithms.size(); ++k) ranks[k].name = algorithms[k];
    std::vector<double> r(algorithms.size());
    for (std::size_t q = 0; q <= a.budget; ++q) {
      if (cobras_benchmark_aligned_ranks(bench.get(), q, r.data(), r.size()) != COBRAS_OK) break;
      for (std::size_t k = 0; k < algorithms.size(); ++k) ranks[k].y.push_back(r[k]);
    }
    ChartSpec spec{"aligned rank", "queries", "rank",
                   1.0, static_cast<double>(algorithms.size()), true};
    write_file((fs::path(a.plot_dir) / "aligned_ranks.svg").string(), line_chart_svg(spec, ranks));
  }
  return failures == cells ? 1 : 0;
}

SessionServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

struct ServeArgs {
  ServerConfig config;
  std::string host = "127.0.0.1";
  int port = 8080;
};

int cmd_serve(ServeArgs a) {
  SessionServer server(a.config);
  const int port = server.bind(a.host, a.port);
  if (port < 0) {
    spdlog::error("cannot bind {}:{}", a.host, a.port);
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "serving " << a.config.data_path << " on http://" << a.host << ":" << port
            << " (sessions in " << a.config.session_dir.string() << ")" << std::endl;
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Active constraint-based clustering with COBRAS"};
  app.set_config("--config", "", "Read options from an INI/TOML file");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cobras_version()));

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Cluster a dataset, answering queries from labels or stdin");
  run_cmd->add_option("--data", run.data, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--label-column", run.label_column, "Label column (default: 'class' if present)");
  run_cmd->add_option("--budget", run.budget, "Maximum number of answered queries")->capture_default_str();
  run_cmd->add_option("--oracle", run.oracle, "Who answers the queries")
      ->check(CLI::IsMember({"labels", "interactive"}))
      ->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Random seed")->capture_default_str();
  run_cmd->add_option("--trace", run.trace, "Write the JSON trace here");
  run_cmd->add_option("--assignments", run.assignments, "Write instance_id,cluster_id CSV here");

  ReplayArgs replay;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a trace and verify every recorded query");
  replay_cmd->add_option("--trace", replay.trace, "Trace to replay")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--data", replay.data, "Dataset (default: the path in the trace header)");
  replay_cmd->add_option("--label-column", replay.label_column, "Label column override");
  replay_cmd->add_option("--assignments", replay.assignments, "Write the final assignment CSV here");
  replay_cmd->add_option("--trace-out", replay.trace_out, "Write the regenerated trace here");

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Repeated cross-validation over a task list");
  bench_cmd->add_option("--tasks", bench.tasks, "CSV: name,path[,label_column]")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--algorithms", bench.algorithms, "Comma-separated: cobras, cobra:<N_S>")->capture_default_str();
  bench_cmd->add_option("--budget", bench.budget, "Queries per run")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Master seed")->capture_default_str();
  bench_cmd->add_option("--repetitions", bench.repetitions, "Cross-validation repetitions")->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--folds", bench.folds, "Folds per repetition")->capture_default_str()->check(CLI::Range(2, 1000));
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = all cores)")->capture_default_str();
  bench_cmd->add_option("--csv", bench.csv, "Per-cell curves");
  bench_cmd->add_option("--json", bench.json, "Mean curves, aligned ranks and failures");
  bench_cmd->add_option("--plot-dir", bench.plot_dir, "Write SVG plots here");

  ServeArgs serve;
  std::string session_dir = "sessions";
  auto* serve_cmd = app.add_subcommand("serve", "Serve interactive sessions over HTTP long-poll");
  serve_cmd->add_option("--data", serve.config.data_path, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--label-column", serve.config.label_column, "Label column");
  serve_cmd->add_option("--budget", serve.config.budget, "Default budget per session")->capture_default_str();
  serve_cmd->add_option("--seed", serve.config.seed, "Default seed per session")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "TCP port (0 = any free port)")->capture_default_str()->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", serve.host, "Address to bind")->capture_default_str();
  serve_cmd->add_option("--session-dir", session_dir, "Where session traces are kept")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*replay_cmd) return cmd_replay(replay);
    if (*bench_cmd) return cmd_benchmark(bench);
    if (*serve_cmd) {
      serve.config.session_dir = session_dir;
      return cmd_serve(serve);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
