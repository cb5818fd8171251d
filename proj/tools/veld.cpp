#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "veld/audio.hpp"
#include "veld/error.hpp"
#include "veld/harness.hpp"
#include "veld/server.hpp"
#include "veld/survey.hpp"
#include "veld/tcp.hpp"
#include "veld/world.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

veld::Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw veld::Error(veld::ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  veld::Json j = veld::Json::parse(text.str(), nullptr, false);
  if (j.is_discarded()) throw veld::Error(veld::ErrorCode::ParseError, "'" + path + "' is not JSON");
  return j;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw veld::Error(veld::ErrorCode::IoError, "cannot write '" + path + "'");
  out << text << '\n';
}

int serve(std::uint16_t port, const std::string& config_path, std::size_t max_clients) {
  auto config = veld::ServerConfig::load_file(config_path);
  if (port != 0) config.listen_port = port;
  if (max_clients != 0) config.max_clients = max_clients;
  if (config.world_file.empty()) {
    throw veld::Error(veld::ErrorCode::InvalidConfig, "config has no world_file");
  }
  const auto world = veld::World::load_file(config.world_file);
  veld::SyncServer server(config, world);
  veld::TcpServer tcp(server, config.listen_port, std::max(2u, std::thread::hardware_concurrency()));
  std::cerr << "veld: serving " << world.lessons().size() << " rooms on port " << tcp.port()
            << " (max " << config.max_clients << " clients)\n";
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  tcp.stop();
  std::cerr << "veld: stopped\n";
  return 0;
}

int validate_world(const std::string& path) {
  const auto world = veld::World::load_file(path);
  std::cout << "ok: " << world.lessons().size() << " lessons\n";
  for (const auto& lesson : world.lessons()) {
    std::cout << "  " << lesson.name << " (central " << lesson.central << ", "
              << lesson.pods.size() << " pods, " << lesson.portals.size() << " portals)\n";
  }
  return 0;
}

// Positions file: {"positions": {"id": [x,y,z]}, "groups": {"id": "g"},
// "audio_zone": {...}}; groups and audio_zone are optional.
int audio_report(const std::string& positions_path, const std::string& world_path,
                 const std::string& out) {
  const auto j = read_json_file(positions_path);
  veld::AudioZone zone;
  if (!world_path.empty()) {
    if (auto z = veld::World::load_file(world_path).audio_zone()) zone = *z;
  }
  std::map<std::string, veld::Vec3> positions;
  std::map<std::string, std::string> groups;
  try {
    if (j.contains("audio_zone")) zone = veld::audio_zone_from_json(j.at("audio_zone"));
    for (const auto& [id, p] : j.at("positions").items()) {
      auto v = p.get<std::vector<double>>();
      if (v.size() != 3) throw veld::Error(veld::ErrorCode::ParseError, "position of " + id);
      positions[id] = veld::Vec3{v[0], v[1], v[2]};
    }
    if (j.contains("groups")) groups = j.at("groups").get<std::map<std::string, std::string>>();
  } catch (const veld::Json::exception& e) {
    throw veld::Error(veld::ErrorCode::ParseError, e.what());
  }
  veld::validate(zone);
  veld::Json report = {{"audio_zone", veld::to_json(zone)},
                       {"gains", veld::to_json(veld::gain_matrix(zone, positions))}};
  if (zone.coef < 1.0) {
    for (const auto& [id, _] : groups) {
      if (!positions.count(id)) {
        throw veld::Error(veld::ErrorCode::ParseError, "grouped client " + id + " has no position");
      }
    }
    report["privacy"] = veld::to_json(veld::check_group_privacy(zone, groups, positions));
  } else {
    report["privacy"] = nullptr;
  }
  write_output(out, report.dump(2));
  return 0;
}

struct BenchOptions {
  std::size_t clients = 10;
  std::size_t instructors = 1;
  std::size_t actions = 100;
  double rate = 0.0;
  double presence_rate = 0.0;
  double duration = 60.0;
  std::string out = "bench_report.json";
  std::string server;
  std::string token;
  std::string room;
  std::string binding = "slides";
  std::string world;
  double latency_ms = 5.0;
  double jitter_ms = 0.0;
  std::uint64_t seed = 1;
  bool in_memory = false;
};

int bench(const BenchOptions& o) {
  veld::ScenarioConfig cfg;
  cfg.n_clients = o.clients;
  cfg.n_instructors = o.instructors;
  cfg.action_count = o.actions;
  cfg.action_rate = o.rate;
  cfg.presence_rate = o.presence_rate;
  cfg.duration_s = o.duration;
  cfg.room = o.room;
  cfg.binding = o.binding;
  cfg.net_model = veld::NetModel{o.latency_ms, o.jitter_ms, o.seed};

  veld::MetricsReport report;
  if (!o.server.empty()) {
    const auto colon = o.server.rfind(':');
    if (colon == std::string::npos) {
      throw veld::Error(veld::ErrorCode::InvalidConfig, "--server expects host:port");
    }
    veld::TcpEndpoint endpoint;
    endpoint.host = o.server.substr(0, colon);
    endpoint.port = static_cast<std::uint16_t>(std::stoul(o.server.substr(colon + 1)));
    endpoint.instructor_token = o.token;
    report = veld::run_scenario(cfg, endpoint);
  } else {
    auto world = o.world.empty() ? veld::default_bench_world() : veld::World::load_file(o.world);
    if (o.in_memory) {
      report = veld::run_in_memory(cfg, world);
    } else {
      // A private server on a loopback socket.
      if (cfg.room.empty()) cfg.room = world.lessons().front().name;
      veld::ServerConfig sc;
      sc.instructor_token = "bench-local";
      sc.max_clients = veld::kMaxScenarioClients;
      veld::SyncServer server(sc, std::move(world));
      veld::TcpServer tcp(server, 0, 2, "127.0.0.1");
      report = veld::run_scenario(cfg, {"127.0.0.1", tcp.port(), sc.instructor_token, &server});
    }
  }
  veld::emit_report(report, o.out);
  std::cout << report.table();
  return report.converged ? 0 : 2;
}

int survey(const std::string& in, const std::string& question, const std::string& out,
           const std::string& subjects) {
  const auto responses = veld::load_responses_file(in);
  auto report = veld::survey_report(responses, question);
  if (!subjects.empty()) {
    const auto records = veld::load_subjects_file(subjects);
    std::map<std::string, veld::Mode> prefs;
    std::uint64_t dizzy = 0;
    for (const auto& [id, r] : records) {
      prefs[id] = r.preferred_mode;
      dizzy += r.felt_dizzy ? 1 : 0;
    }
    const auto rate = veld::preference_rate(prefs);
    report["preference_rate"] = {{"num", rate.num}, {"den", rate.den}, {"value", rate.value()},
                                 {"label", veld::label(rate)}};
    const veld::Fraction dizzy_share{dizzy, records.size()};
    report["felt_dizzy"] = {{"num", dizzy_share.num}, {"den", dizzy_share.den},
                            {"value", dizzy_share.value()}, {"label", veld::label(dizzy_share)}};
  }
  write_output(out, report.dump(2));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"veld: shared-state server and tools for multi-user classroom lessons"};
  app.require_subcommand(1);

  std::uint16_t port = 0;
  std::string config_path;
  std::size_t max_clients = 0;
  auto* serve_cmd = app.add_subcommand("serve", "Run the sync server over TCP");
  serve_cmd->add_option("--port", port, "Listen port (overrides the config)");
  serve_cmd->add_option("--config", config_path, "Server config JSON")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--max-clients", max_clients, "Connection cap (overrides the config)");

  std::string world_path;
  auto* validate_cmd = app.add_subcommand("validate-world", "Check a lesson-world config");
  validate_cmd->add_option("path", world_path, "World config JSON")->required();

  std::string positions_path;
  std::string audio_world;
  std::string audio_out;
  auto* audio_cmd = app.add_subcommand("audio-report", "Gain matrix and group privacy for a positions file");
  audio_cmd->add_option("--positions", positions_path, "Positions JSON")->required();
  audio_cmd->add_option("--world", audio_world, "Take the audio zone from this world config");
  audio_cmd->add_option("--out", audio_out, "Output path (stdout by default)");

  BenchOptions bo;
  auto* bench_cmd = app.add_subcommand("bench", "Run a load scenario and write a metrics report");
  bench_cmd->add_option("--clients", bo.clients, "Simulated clients, 1..150");
  bench_cmd->add_option("--instructors", bo.instructors, "How many of the clients are instructors");
  bench_cmd->add_option("--actions", bo.actions, "Total actions issued");
  bench_cmd->add_option("--rate", bo.rate, "Actions per second, 0 for back to back");
  bench_cmd->add_option("--presence-rate", bo.presence_rate, "Position updates per second per client");
  bench_cmd->add_option("--duration", bo.duration, "Time budget in seconds");
  bench_cmd->add_option("--out", bo.out, "Report path; a .txt table is written next to it");
  bench_cmd->add_option("--binding", bo.binding, "Display app every client binds to");
  bench_cmd->add_option("--room", bo.room, "Room to join");
  auto* server_opt = bench_cmd->add_option("--server", bo.server, "host:port of a running server");
  bench_cmd->add_option("--token", bo.token, "Instructor token of that server")->needs(server_opt);
  auto* in_memory = bench_cmd->add_flag("--in-memory", bo.in_memory,
                                        "Use the simulated network instead of a loopback server");
  in_memory->excludes(server_opt);
  bench_cmd->add_option("--world", bo.world, "World config for the local server");
  bench_cmd->add_option("--latency-ms", bo.latency_ms, "Simulated one-way latency");
  bench_cmd->add_option("--jitter-ms", bo.jitter_ms, "Simulated jitter, uniform in [0, j)");
  bench_cmd->add_option("--seed", bo.seed, "RNG seed");

  std::string survey_in;
  std::string question;
  std::string survey_out;
  std::string subjects;
  auto* survey_cmd = app.add_subcommand("survey", "Summarize Likert responses for one question");
  survey_cmd->add_option("--in", survey_in, "Responses CSV")->required();
  survey_cmd->add_option("--question", question, "Question id")->required();
  survey_cmd->add_option("--out", survey_out, "Output path (stdout by default)");
  survey_cmd->add_option("--subjects", subjects, "Subjects CSV with preferences");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) return serve(port, config_path, max_clients);
    if (*validate_cmd) return validate_world(world_path);
    if (*audio_cmd) return audio_report(positions_path, audio_world, audio_out);
    if (*bench_cmd) return bench(bo);
    if (*survey_cmd) return survey(survey_in, question, survey_out, subjects);
  } catch (const veld::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
