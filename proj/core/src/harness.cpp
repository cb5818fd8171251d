#include "veld/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "veld/error.hpp"
#include "veld/protocol.hpp"
#include "veld/replica.hpp"
#include "veld/tcp.hpp"

namespace veld {

namespace {

constexpr const char* kBenchToken = "bench-instructor";
constexpr double kGraceS = 10.0;
constexpr double kFlushPeriodMs = 50.0;
constexpr std::uint32_t kDeckLength = 12;

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

// Per-client protocol driver shared by both transports. on_line() runs on one
// thread at a time per client; the send side may be called from any thread.
class SimClient {
 public:
  using SendFn = std::function<void(std::string)>;
  using NowFn = std::function<double()>;

  struct Stats {
    std::string client_id;
    Role role = Role::Student;
    bool joined = false;
    std::uint64_t events = 0;
    std::uint64_t acks = 0;
    std::uint64_t action_errors = 0;
    std::uint64_t other_errors = 0;
    std::uint64_t protocol_errors = 0;
    std::uint64_t divergences = 0;
    std::uint64_t max_gap = 0;
    std::uint64_t last_seq = 0;
    std::uint64_t lines_in = 0;
    std::uint64_t lines_out = 0;
    double last_rx_ms = 0.0;
    std::vector<std::pair<std::uint64_t, double>> acked;    // seq, send time
    std::vector<std::pair<std::uint64_t, double>> applied;  // seq, apply time
  };

  SimClient(std::string name, std::optional<std::string> token, std::string room,
            std::string binding, NowFn now)
      : name_(std::move(name)),
        token_(std::move(token)),
        room_(std::move(room)),
        now_(std::move(now)),
        replica_(DisplayBinding{std::move(binding)}) {}

  void attach(SendFn send) { send_ = std::move(send); }
  void on_change(std::function<void()> fn) { on_change_ = std::move(fn); }

  void hello() { transmit(wire::encode(wire::ClientMessage{wire::Hello{token_, name_}})); }

  void send_action(wire::Action action) {
    std::lock_guard lock(mu_);
    const std::string line = wire::encode(wire::ClientMessage{action});
    pending_.push_back(Pending{std::move(action), now_()});
    ++stats_.lines_out;
    send_(line);
  }

  void step_position(std::mt19937_64& rng, const std::optional<Box>& bounds) {
    std::uniform_real_distribution<double> step(-0.5, 0.5);
    Vec3 p;
    {
      std::lock_guard lock(mu_);
      p = position_ + Vec3{step(rng), 0.0, step(rng)};
      if (bounds) {
        p.x = std::clamp(p.x, bounds->min.x, bounds->max.x);
        p.z = std::clamp(p.z, bounds->min.z, bounds->max.z);
      }
    }
    transmit(wire::encode(wire::ClientMessage{wire::Pos{p}}));
  }

  void on_line(std::string_view line) {
    {
      std::lock_guard lock(mu_);
      ++stats_.lines_in;
      stats_.last_rx_ms = now_();
      try {
        handle(wire::parse_server_message(line));
      } catch (const Error&) {
        ++stats_.protocol_errors;
      }
    }
    if (on_change_) on_change_();
  }

  Stats stats() const {
    std::lock_guard lock(mu_);
    Stats s = stats_;
    s.max_gap = replica_.max_gap();
    s.last_seq = replica_.last_seq();
    s.divergences += replica_.divergences();
    return s;
  }

  StateDigest view_digest() const {
    std::lock_guard lock(mu_);
    return replica_.view_digest();
  }

  std::size_t responses() const {
    std::lock_guard lock(mu_);
    return stats_.acks + stats_.action_errors;
  }

 private:
  struct Pending {
    wire::Action action;
    double sent_ms;
  };

  void transmit(std::string line) {
    {
      std::lock_guard lock(mu_);
      ++stats_.lines_out;
    }
    send_(std::move(line));
  }

  void handle(const wire::ServerMessage& message) {
    std::visit(
        Overloaded{
            [&](const wire::Welcome& m) {
              stats_.client_id = m.client_id;
              stats_.role = m.role;
              ++stats_.lines_out;
              send_(wire::encode(
                  wire::ClientMessage{wire::Join{room_, replica_.binding().app_id}}));
            },
            [&](const SnapshotMessage& m) {
              replica_.load_snapshot(m);
              stats_.joined = true;
            },
            [&](const wire::Event& m) {
              ++stats_.events;
              replica_.apply_event(m.action);
              stats_.applied.emplace_back(m.action.seq.value_or(0), now_());
            },
            [&](const wire::Ack& m) {
              if (pending_.empty()) {
                ++stats_.protocol_errors;
                return;
              }
              Pending p = std::move(pending_.front());
              pending_.pop_front();
              ++stats_.acks;
              stats_.acked.emplace_back(m.seq, p.sent_ms);
              // The actor gets an ACK instead of an EVENT; apply its own
              // action now that the server has ordered it.
              ActionEnvelope own{m.seq,        p.action.room, p.action.app, stats_.client_id,
                                 p.action.kind, p.action.payload, p.action.cts};
              replica_.apply_event(own);
            },
            [&](const wire::Presence& m) {
              if (m.kind == wire::PresenceKind::Join) {
                replica_.on_join(m.client_id);
              } else if (m.kind == wire::PresenceKind::Leave) {
                replica_.on_leave(m.client_id);
              } else if (m.client_id == stats_.client_id && m.position) {
                position_ = *m.position;
              }
            },
            [&](const wire::ErrorReply&) {
              if (!pending_.empty()) {
                pending_.pop_front();
                ++stats_.action_errors;
              } else {
                ++stats_.other_errors;
              }
            },
        },
        message);
  }

  std::string name_;
  std::optional<std::string> token_;
  std::string room_;
  NowFn now_;
  SendFn send_;
  std::function<void()> on_change_;

  mutable std::mutex mu_;
  Replica replica_;
  Vec3 position_;
  std::deque<Pending> pending_;
  Stats stats_;
};

// Every generated action is valid in any state reachable from the script's
// opening SELECT_DECK, whatever order the server sequences them in, so an
// honest server accepts all M.
std::vector<wire::Action> make_script(const ScenarioConfig& cfg, const LessonModule* lesson,
                                      const std::string& room,
                                      const std::vector<std::string>& occupants,
                                      const std::vector<std::string>& students) {
  std::vector<wire::Action> out;
  if (cfg.action_count == 0) return out;
  std::mt19937_64 rng(cfg.net_model.seed ^ 0x5eedf00dULL);
  auto action = [&](std::string_view app, std::string kind, Json payload) {
    return wire::Action{room, std::string(app), std::move(kind), std::move(payload),
                        static_cast<std::int64_t>(out.size())};
  };
  out.push_back(action(kSlidesApp, "SELECT_DECK",
                       {{"deck_id", "deck-0"}, {"deck_length", kDeckLength}}));

  const bool has_faceoff =
      !lesson || std::find(lesson->apps.begin(), lesson->apps.end(), kFaceOffApp) != lesson->apps.end();
  std::vector<std::string> pod_ids;
  if (lesson) {
    for (const auto& pod : lesson->pods) pod_ids.push_back(pod.pod_id);
  }

  std::uniform_int_distribution<int> pick(0, 99);
  std::uniform_int_distribution<std::uint32_t> slide(0, kDeckLength - 1);
  while (out.size() < cfg.action_count) {
    const int r = pick(rng);
    if (r < 30) {
      out.push_back(action(kSlidesApp, "NEXT_SLIDE", Json::object()));
    } else if (r < 42) {
      out.push_back(action(kSlidesApp, "PREV_SLIDE", Json::object()));
    } else if (r < 55) {
      out.push_back(action(kSlidesApp, "GOTO_SLIDE", {{"index", slide(rng)}}));
    } else if (r < 60) {
      out.push_back(action(kSlidesApp, "SELECT_DECK",
                           {{"deck_id", "deck-" + std::to_string(out.size())},
                            {"deck_length", kDeckLength}}));
    } else if (r < 70 && has_faceoff) {
      out.push_back(action(kFaceOffApp, "NEXT_PROMPT",
                           {{"prompt_id", "p" + std::to_string(out.size())}}));
    } else if (r < 73 && has_faceoff) {
      out.push_back(action(kFaceOffApp, "RESET", Json::object()));
    } else if (r < 78) {
      out.push_back(action(kPodsApp, "LOCK", Json::object()));
    } else if (r < 83) {
      out.push_back(action(kPodsApp, "UNLOCK", Json::object()));
    } else if (r < 87 && !pod_ids.empty()) {
      Json assignment = Json::object();
      for (std::size_t i = 0; i < students.size() && i < pod_ids.size(); ++i) {
        assignment[students[i]] = pod_ids[(i + out.size()) % pod_ids.size()];
      }
      out.push_back(action(kPodsApp, "ASSIGN", {{"assignment", std::move(assignment)}}));
    } else if (r < 95) {
      Json assignment = Json::object();
      for (std::size_t i = 0; i < occupants.size(); ++i) {
        assignment[occupants[i]] = "group-" + std::to_string((i + out.size()) % 3);
      }
      out.push_back(action(kGroupsApp, "ASSIGN", {{"assignment", std::move(assignment)}}));
    } else {
      out.push_back(action(kGroupsApp, "CLEAR", Json::object()));
    }
  }
  return out;
}

struct Collected {
  std::vector<SimClient::Stats> stats;
  std::vector<StateDigest> digests;
};

MetricsReport assemble(const ScenarioConfig& cfg, const std::string& transport,
                       const Collected& c, std::optional<StateDigest> server_digest,
                       double elapsed_s, std::uint64_t messages) {
  MetricsReport r;
  r.transport = transport;
  r.clients = cfg.n_clients;
  r.instructors = cfg.n_instructors;
  r.actions = cfg.action_count;

  std::map<std::uint64_t, double> sent_at;
  for (const auto& s : c.stats) {
    r.delivered_events += s.events;
    r.acks += s.acks;
    r.rejections += s.action_errors;
    r.max_seq_gap = std::max(r.max_seq_gap, s.max_gap);
    r.per_client_max_gap.push_back(s.max_gap);
    for (const auto& [seq, t] : s.acked) sent_at[seq] = t;
  }
  std::vector<double> latencies;
  for (const auto& s : c.stats) {
    for (const auto& [seq, t] : s.applied) {
      if (auto it = sent_at.find(seq); it != sent_at.end()) latencies.push_back(t - it->second);
    }
  }
  r.action_latency_ms = summarize_latencies(std::move(latencies));

  std::vector<StateDigest> all = c.digests;
  if (server_digest) all.push_back(*server_digest);
  std::uint64_t divergences = 0;
  for (const auto& s : c.stats) divergences += s.divergences + s.protocol_errors;
  r.converged = !all.empty() && verify_convergence(all) && divergences == 0;
  r.distinct_digests = std::set<StateDigest>(all.begin(), all.end()).size();
  r.final_digest = server_digest ? server_digest->hex : (all.empty() ? "" : all.front().hex);
  r.messages = messages;
  r.elapsed_s = elapsed_s;
  r.msgs_per_second = elapsed_s > 0.0 ? static_cast<double>(messages) / elapsed_s : 0.0;
  return r;
}

std::string resolve_room(const ScenarioConfig& cfg, const World& world) {
  if (!cfg.room.empty()) {
    if (!world.find(cfg.room)) throw Error(ErrorCode::UnknownRoom, "no room named '" + cfg.room + "'");
    return cfg.room;
  }
  if (world.lessons().empty()) throw Error(ErrorCode::InvalidConfig, "world has no lessons");
  return world.lessons().front().name;
}

std::string client_name(std::size_t i, bool instructor) {
  return (instructor ? "instructor-" : "student-") + std::to_string(i);
}

}  // namespace

// ---------------------------------------------------------------------------

void ScenarioConfig::validate() const {
  if (n_clients < 1 || n_clients > kMaxScenarioClients) {
    throw Error(ErrorCode::InvalidConfig, "n_clients must be in 1..150");
  }
  if (n_instructors < 1 || n_instructors > n_clients) {
    throw Error(ErrorCode::InvalidConfig, "n_instructors must be in 1..n_clients");
  }
  if (!(action_rate >= 0.0) || !(presence_rate >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "rates must be non-negative");
  }
  if (!(duration_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "duration_s must be positive");
  if (net_model.base_latency_ms < 0.0 || net_model.jitter_ms < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "latency and jitter must be non-negative");
  }
}

bool verify_convergence(std::span<const StateDigest> digests) {
  if (digests.empty()) throw std::invalid_argument("verify_convergence needs at least one digest");
  return std::all_of(digests.begin(), digests.end(),
                     [&](const StateDigest& d) { return d == digests.front(); });
}

std::optional<LatencySummary> summarize_latencies(std::vector<double> samples) {
  if (samples.empty()) return std::nullopt;
  std::sort(samples.begin(), samples.end());
  auto rank = [&](double pct) {
    auto idx = static_cast<std::size_t>(std::ceil(pct / 100.0 * samples.size()));
    return samples[std::clamp<std::size_t>(idx, 1, samples.size()) - 1];
  };
  return LatencySummary{rank(50), rank(95), rank(99), samples.back()};
}

Json MetricsReport::to_json() const {
  Json latency = nullptr;
  if (action_latency_ms) {
    latency = {{"p50", action_latency_ms->p50},
               {"p95", action_latency_ms->p95},
               {"p99", action_latency_ms->p99},
               {"max", action_latency_ms->max}};
  }
  return {{"schema", "veld.bench.report/1"},
          {"transport", transport},
          {"clients", clients},
          {"instructors", instructors},
          {"actions", actions},
          {"delivered_events", delivered_events},
          {"acks", acks},
          {"rejections", rejections},
          {"action_latency_ms", std::move(latency)},
          {"convergence",
           {{"converged", converged},
            {"final_digest", final_digest},
            {"distinct_digests", distinct_digests}}},
          {"messages", messages},
          {"msgs_per_second", msgs_per_second},
          {"elapsed_s", elapsed_s},
          {"max_seq_gap", max_seq_gap},
          {"per_client_max_gap", per_client_max_gap}};
}

MetricsReport MetricsReport::from_json(const Json& j) {
  try {
    MetricsReport r;
    r.transport = j.at("transport").get<std::string>();
    r.clients = j.at("clients").get<std::size_t>();
    r.instructors = j.at("instructors").get<std::size_t>();
    r.actions = j.at("actions").get<std::size_t>();
    r.delivered_events = j.at("delivered_events").get<std::uint64_t>();
    r.acks = j.at("acks").get<std::uint64_t>();
    r.rejections = j.at("rejections").get<std::uint64_t>();
    if (const Json& l = j.at("action_latency_ms"); !l.is_null()) {
      r.action_latency_ms = LatencySummary{l.at("p50").get<double>(), l.at("p95").get<double>(),
                                           l.at("p99").get<double>(), l.at("max").get<double>()};
    }
    const Json& conv = j.at("convergence");
    r.converged = conv.at("converged").get<bool>();
    r.final_digest = conv.at("final_digest").get<std::string>();
    r.distinct_digests = conv.at("distinct_digests").get<std::size_t>();
    r.messages = j.at("messages").get<std::uint64_t>();
    r.msgs_per_second = j.at("msgs_per_second").get<double>();
    r.elapsed_s = j.at("elapsed_s").get<double>();
    r.max_seq_gap = j.at("max_seq_gap").get<std::uint64_t>();
    r.per_client_max_gap = j.at("per_client_max_gap").get<std::vector<std::uint64_t>>();
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

std::string MetricsReport::table() const {
  std::ostringstream out;
  auto row = [&](const std::string& key, const std::string& value) {
    out << std::left << std::setw(22) << key << value << '\n';
  };
  auto num = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << v;
    return s.str();
  };
  row("transport", transport);
  row("clients", std::to_string(clients) + " (" + std::to_string(instructors) + " instructors)");
  row("actions", std::to_string(actions));
  row("delivered_events", std::to_string(delivered_events));
  row("acks", std::to_string(acks));
  row("rejections", std::to_string(rejections));
  if (action_latency_ms) {
    row("latency p50 ms", num(action_latency_ms->p50));
    row("latency p95 ms", num(action_latency_ms->p95));
    row("latency p99 ms", num(action_latency_ms->p99));
    row("latency max ms", num(action_latency_ms->max));
  } else {
    row("latency", "absent (no deliveries)");
  }
  row("converged", converged ? "yes" : "NO");
  row("distinct_digests", std::to_string(distinct_digests));
  row("final_digest", final_digest);
  row("max_seq_gap", std::to_string(max_seq_gap));
  row("messages", std::to_string(messages));
  row("msgs_per_second", num(msgs_per_second));
  row("elapsed_s", num(elapsed_s));
  return out.str();
}

void emit_report(const MetricsReport& report, const std::string& path) {
  std::ofstream json(path);
  if (!json) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  json << report.to_json().dump(2) << '\n';
  std::ofstream table(path + ".txt");
  if (!table) throw Error(ErrorCode::IoError, "cannot write '" + path + ".txt'");
  table << report.table();
  if (!json || !table) throw Error(ErrorCode::IoError, "write to '" + path + "' failed");
}

World default_bench_world() {
  return World::load(R"({
    "lessons": [{
      "name": "bench-hall",
      "bounds": {"min": [-50, 0, -50], "max": [50, 10, 50]},
      "spawn": [0, 0, 0],
      "apps": ["slides", "faceoff"],
      "central": "slides",
      "pods": [
        {"id": "pod-a", "center": [-10, 0, 10], "radius": 1.0},
        {"id": "pod-b", "center": [0, 0, 10], "radius": 1.0},
        {"id": "pod-c", "center": [10, 0, 10], "radius": 1.0}
      ],
      "portals": [],
      "decor": []
    }],
    "audio_zone": {"coef": 0.5, "ref_distance": 1.0, "epsilon": 0.015625}
  })");
}

// ---------------------------------------------------------------------------
// In-memory transport

namespace {

class SimPeer : public Peer {
 public:
  SimPeer(SimNetwork& net, SimNetwork::Link& link, SimClient& client)
      : net_(net), link_(link), client_(client) {}
  void send(std::string line) override {
    SimClient* client = &client_;
    net_.transmit(link_, [client, line = std::move(line)] { client->on_line(line); });
  }
  void close() override {}

 private:
  SimNetwork& net_;
  SimNetwork::Link& link_;
  SimClient& client_;
};

}  // namespace

MetricsReport run_in_memory(const ScenarioConfig& cfg, const World& world) {
  cfg.validate();
  const std::string room = resolve_room(cfg, world);
  const LessonModule* lesson = world.find(room);

  SimNetwork net(cfg.net_model);
  ServerConfig server_config;
  server_config.instructor_token = kBenchToken;
  server_config.max_clients = kMaxScenarioClients;
  SyncServer server(server_config, world, [&net] { return net.now_ms() / 1000.0; });

  struct Endpoint {
    SimNetwork::Link up;
    SimNetwork::Link down;
    ConnectionId id = 0;
    std::unique_ptr<SimClient> client;
  };
  std::vector<std::unique_ptr<Endpoint>> endpoints;
  std::size_t responses = 0;
  for (std::size_t i = 0; i < cfg.n_clients; ++i) {
    auto ep = std::make_unique<Endpoint>();
    const bool instructor = i < cfg.n_instructors;
    ep->client = std::make_unique<SimClient>(
        client_name(i, instructor),
        instructor ? std::optional<std::string>(kBenchToken) : std::nullopt, room, cfg.binding,
        [&net] { return net.now_ms(); });
    ep->id = server.connect(std::make_shared<SimPeer>(net, ep->down, *ep->client));
    Endpoint* raw = ep.get();
    ep->client->attach([&net, &server, raw](std::string line) {
      net.transmit(raw->up, [&server, raw, line = std::move(line)] { server.receive(raw->id, line); });
    });
    endpoints.push_back(std::move(ep));
  }

  const double deadline_ms = (cfg.duration_s + kGraceS) * 1000.0;
  for (auto& ep : endpoints) ep->client->hello();
  if (!net.run_until(deadline_ms)) throw Error(ErrorCode::Timeout, "clients did not finish joining");
  std::vector<std::string> occupants;
  std::vector<std::string> students;
  for (auto& ep : endpoints) {
    auto s = ep->client->stats();
    if (!s.joined) throw Error(ErrorCode::ConnectFailure, "client failed to join: " + s.client_id);
    occupants.push_back(s.client_id);
    if (s.role == Role::Student) students.push_back(s.client_id);
  }

  const double t0 = net.now_ms();
  const std::uint64_t messages_at_start = net.messages();
  const auto script = make_script(cfg, lesson, room, occupants, students);
  auto instructor = [&](std::size_t j) -> SimClient& {
    return *endpoints[j % cfg.n_instructors]->client;
  };
  for (std::size_t i = 0; i < cfg.n_instructors; ++i) {
    endpoints[i]->client->on_change([&responses, &endpoints, &cfg] {
      std::size_t total = 0;
      for (std::size_t k = 0; k < cfg.n_instructors; ++k) total += endpoints[k]->client->responses();
      responses = total;
    });
  }
  auto done = [&] { return responses >= script.size(); };

  if (!script.empty()) {
    instructor(0).send_action(script[0]);
    while (responses < 1 && net.step()) {
    }
    const double interval_ms = cfg.action_rate > 0.0 ? 1000.0 / cfg.action_rate : 0.0;
    const double t1 = net.now_ms();
    for (std::size_t j = 1; j < script.size(); ++j) {
      net.schedule(t1 + (j - 1) * interval_ms, [&, j] { instructor(j).send_action(script[j]); });
    }
  }

  std::mt19937_64 walk(cfg.net_model.seed + 1);
  const std::optional<Box> bounds = lesson ? std::optional<Box>(lesson->bounds) : std::nullopt;
  std::function<void(std::size_t)> presence_tick;
  const double period_ms = cfg.presence_rate > 0.0 ? 1000.0 / cfg.presence_rate : 0.0;
  presence_tick = [&](std::size_t i) {
    if (done()) return;
    endpoints[i]->client->step_position(walk, bounds);
    net.schedule(net.now_ms() + period_ms, [&, i] { presence_tick(i); });
  };
  if (period_ms > 0.0) {
    for (std::size_t i = 0; i < endpoints.size(); ++i) {
      net.schedule(t0 + period_ms * static_cast<double>(i + 1) / endpoints.size(),
                   [&, i] { presence_tick(i); });
    }
  }
  int trailing_flushes = 3;
  std::function<void()> flush_tick = [&] {
    server.flush_presence();
    if (done() && --trailing_flushes <= 0) return;
    net.schedule(net.now_ms() + kFlushPeriodMs, flush_tick);
  };
  net.schedule(t0 + kFlushPeriodMs, flush_tick);

  if (!net.run_until(t0 + deadline_ms)) {
    throw Error(ErrorCode::Timeout, "scenario did not reach quiescence");
  }

  Collected c;
  for (auto& ep : endpoints) {
    c.stats.push_back(ep->client->stats());
    c.digests.push_back(ep->client->view_digest());
  }
  const StateDigest server_digest =
      digest(project_view(server.room_state(room), DisplayBinding{cfg.binding}));
  const double elapsed_s = (net.now_ms() - t0) / 1000.0;
  return assemble(cfg, "in-memory", c, server_digest, elapsed_s, net.messages() - messages_at_start);
}

// ---------------------------------------------------------------------------
// TCP transport

MetricsReport run_scenario(const ScenarioConfig& cfg, const TcpEndpoint& endpoint) {
  cfg.validate();
  if (cfg.room.empty()) throw Error(ErrorCode::InvalidConfig, "a room name is required over TCP");
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto now_ms = [start] {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };
  auto deadline = start + std::chrono::duration_cast<Clock::duration>(
                              std::chrono::duration<double>(cfg.duration_s + kGraceS));

  std::mutex mu;
  std::condition_variable cv;
  auto notify = [&] {
    std::lock_guard lock(mu);
    cv.notify_all();
  };

  TcpClientPool pool(2);
  std::vector<std::unique_ptr<SimClient>> clients;
  std::vector<std::shared_ptr<LineChannel>> channels;
  // Runs first on exit: no handler may touch a client after this point, and
  // the sockets are released while the pool's context still exists.
  struct StopPool {
    TcpClientPool& pool;
    ~StopPool() { pool.stop(); }
  } stop_pool{pool};
  for (std::size_t i = 0; i < cfg.n_clients; ++i) {
    const bool instructor = i < cfg.n_instructors;
    auto client = std::make_unique<SimClient>(
        client_name(i, instructor),
        instructor ? std::optional<std::string>(endpoint.instructor_token) : std::nullopt, cfg.room,
        cfg.binding, now_ms);
    client->on_change(notify);
    SimClient* raw = client.get();
    auto channel = pool.connect(endpoint.host, endpoint.port,
                                [raw](std::string_view line) { raw->on_line(line); });
    client->attach([channel](std::string line) { channel->send(std::move(line)); });
    clients.push_back(std::move(client));
    channels.push_back(std::move(channel));
  }
  auto close_all = [&] {
    for (auto& ch : channels) ch->close();
  };
  auto wait_for = [&](auto&& predicate, const char* what) {
    std::unique_lock lock(mu);
    if (!cv.wait_until(lock, deadline, predicate)) {
      lock.unlock();
      close_all();
      throw Error(ErrorCode::Timeout, what);
    }
  };

  for (auto& c : clients) c->hello();
  wait_for(
      [&] {
        return std::all_of(clients.begin(), clients.end(),
                           [](const auto& c) { return c->stats().joined; });
      },
      "clients did not finish joining");

  std::vector<std::string> occupants;
  std::vector<std::string> students;
  for (auto& c : clients) {
    auto s = c->stats();
    if (s.role != (occupants.size() < cfg.n_instructors ? Role::Instructor : Role::Student)) {
      close_all();
      throw Error(ErrorCode::ConnectFailure, "server assigned an unexpected role; check the token");
    }
    occupants.push_back(s.client_id);
    if (s.role == Role::Student) students.push_back(s.client_id);
  }

  const double t0 = now_ms();
  std::uint64_t lines_at_start = 0;
  for (auto& c : clients) {
    auto s = c->stats();
    lines_at_start += s.lines_in + s.lines_out;
  }
  const auto script = make_script(cfg, nullptr, cfg.room, occupants, students);
  auto responses = [&] {
    std::size_t total = 0;
    for (std::size_t k = 0; k < cfg.n_instructors; ++k) total += clients[k]->responses();
    return total;
  };

  std::atomic<bool> finished{false};
  std::thread presence;
  if (cfg.presence_rate > 0.0) {
    presence = std::thread([&] {
      std::mt19937_64 walk(cfg.net_model.seed + 1);
      const auto period = std::chrono::duration<double>(1.0 / cfg.presence_rate);
      auto next = Clock::now();
      while (!finished.load()) {
        for (auto& c : clients) c->step_position(walk, std::nullopt);
        next += std::chrono::duration_cast<Clock::duration>(period);
        std::this_thread::sleep_until(next);
      }
    });
  }

  std::vector<std::thread> senders;
  if (!script.empty()) {
    clients[0]->send_action(script[0]);
    wait_for([&] { return responses() >= 1; }, "first action was never acknowledged");
    const auto t1 = Clock::now();
    const auto interval = std::chrono::duration<double>(
        cfg.action_rate > 0.0 ? 1.0 / cfg.action_rate : 0.0);
    for (std::size_t k = 0; k < cfg.n_instructors; ++k) {
      senders.emplace_back([&, k, t1, interval] {
        for (std::size_t j = 1; j < script.size(); ++j) {
          if (j % cfg.n_instructors != k) continue;
          std::this_thread::sleep_until(
              t1 + std::chrono::duration_cast<Clock::duration>(interval * static_cast<double>(j - 1)));
          clients[k]->send_action(script[j]);
        }
      });
    }
  }
  auto join_workers = [&] {
    for (auto& t : senders) t.join();
    finished = true;
    if (presence.joinable()) presence.join();
  };
  try {
    wait_for([&] { return responses() >= script.size(); }, "actions were not all answered");
  } catch (...) {
    join_workers();
    throw;
  }
  join_workers();

  // Quiescent once every client has reached the last acknowledged seq and the
  // wire has been silent for the quiet window.
  std::uint64_t last_seq = 0;
  for (std::size_t k = 0; k < cfg.n_instructors; ++k) {
    for (const auto& [seq, _] : clients[k]->stats().acked) last_seq = std::max(last_seq, seq);
  }
  const double quiet_ms = std::max(2.0 * cfg.net_model.base_latency_ms, 100.0);
  while (true) {
    bool caught_up = true;
    double last_rx = 0.0;
    for (auto& c : clients) {
      auto s = c->stats();
      caught_up = caught_up && s.last_seq >= last_seq;
      last_rx = std::max(last_rx, s.last_rx_ms);
    }
    if (caught_up && now_ms() - last_rx >= quiet_ms) break;
    if (Clock::now() > deadline) {
      close_all();
      throw Error(ErrorCode::Timeout, "scenario did not reach quiescence");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }

  Collected c;
  std::uint64_t lines_total = 0;
  for (auto& client : clients) {
    auto s = client->stats();
    lines_total += s.lines_in + s.lines_out;
    c.stats.push_back(std::move(s));
    c.digests.push_back(client->view_digest());
  }
  std::optional<StateDigest> server_digest;
  if (endpoint.local_server) {
    server_digest =
        digest(project_view(endpoint.local_server->room_state(cfg.room), DisplayBinding{cfg.binding}));
  }
  const double elapsed_s = (now_ms() - t0) / 1000.0;
  close_all();
  return assemble(cfg, "tcp", c, server_digest, elapsed_s, lines_total - lines_at_start);
}

}  // namespace veld
