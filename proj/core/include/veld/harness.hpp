#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veld/digest.hpp"
#include "veld/server.hpp"
#include "veld/sim_network.hpp"
#include "veld/world.hpp"

namespace veld {

inline constexpr std::size_t kMaxScenarioClients = 150;

struct ScenarioConfig {
  std::size_t n_clients = 10;
  std::size_t n_instructors = 1;
  std::size_t action_count = 100;  // M, every one issued by an instructor
  double action_rate = 0.0;        // actions/s across all instructors; 0 = back to back
  double presence_rate = 0.0;      // POS updates/s per client
  double duration_s = 60.0;        // budget before Timeout
  NetModel net_model;              // in-memory transport only
  std::string room;                // empty: first lesson of the world
  std::string binding = "slides";

  /// Throws Error(InvalidConfig).
  void validate() const;
};

struct LatencySummary {
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double max = 0.0;

  bool operator==(const LatencySummary&) const = default;
};

struct MetricsReport {
  std::string transport;
  std::size_t clients = 0;
  std::size_t instructors = 0;
  std::size_t actions = 0;
  std::uint64_t delivered_events = 0;
  std::uint64_t acks = 0;
  std::uint64_t rejections = 0;
  std::optional<LatencySummary> action_latency_ms;  // absent when nothing was delivered
  bool converged = false;
  std::string final_digest;
  std::size_t distinct_digests = 0;
  std::uint64_t messages = 0;
  double msgs_per_second = 0.0;
  double elapsed_s = 0.0;
  std::uint64_t max_seq_gap = 0;
  std::vector<std::uint64_t> per_client_max_gap;

  Json to_json() const;
  static MetricsReport from_json(const Json& j);
  std::string table() const;

  bool operator==(const MetricsReport&) const = default;
};

/// True iff every digest is equal. Requires at least one digest.
bool verify_convergence(std::span<const StateDigest> digests);

/// Nearest-rank percentiles; empty input gives no summary.
std::optional<LatencySummary> summarize_latencies(std::vector<double> samples_ms);

// Writes the JSON report to `path` and a plain-text table next to it
// (`path` + ".txt"). Throws Error(IoError).
void emit_report(const MetricsReport& report, const std::string& path);

/// One lesson with both display apps and a few pods; used when no world is given.
World default_bench_world();

// Runs the scenario against a private SyncServer over the simulated network.
// Deterministic for a given config.
MetricsReport run_in_memory(const ScenarioConfig& config, const World& world);

struct TcpEndpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::string instructor_token;
  // When set, the server's own digest joins the convergence check.
  const SyncServer* local_server = nullptr;
};

// Drives real sockets. `config.room` must name a room on that server.
// Throws Error(ConnectFailure) or Error(Timeout).
MetricsReport run_scenario(const ScenarioConfig& config, const TcpEndpoint& endpoint);

}  // namespace veld
