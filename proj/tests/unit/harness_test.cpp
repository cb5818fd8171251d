#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "veld/error.hpp"
#include "veld/harness.hpp"

namespace veld {
namespace {

ScenarioConfig small(std::size_t n, std::size_t m) {
  ScenarioConfig c;
  c.n_clients = n;
  c.action_count = m;
  c.duration_s = 30;
  return c;
}

TEST(Harness, ThreeClientsTenActions) {
  const auto r = run_in_memory(small(3, 10), default_bench_world());
  EXPECT_EQ(r.delivered_events, 20u);
  EXPECT_EQ(r.acks, 10u);
  EXPECT_EQ(r.rejections, 0u);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.distinct_digests, 1u);
  EXPECT_EQ(r.max_seq_gap, 0u);
  ASSERT_TRUE(r.action_latency_ms);
  EXPECT_GT(r.action_latency_ms->p50, 0.0);
}

TEST(Harness, LoneInstructorOnlyGetsAcks) {
  const auto r = run_in_memory(small(1, 5), default_bench_world());
  EXPECT_EQ(r.delivered_events, 0u);
  EXPECT_EQ(r.acks, 5u);
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.action_latency_ms);
}

TEST(Harness, NoActions) {
  const auto r = run_in_memory(small(4, 0), default_bench_world());
  EXPECT_EQ(r.delivered_events, 0u);
  EXPECT_EQ(r.acks, 0u);
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.action_latency_ms);
}

TEST(Harness, SameSeedSameReport) {
  ScenarioConfig c = small(12, 40);
  c.n_instructors = 2;
  c.net_model = {4.0, 6.0, 99};
  c.presence_rate = 5.0;
  c.action_rate = 50.0;
  const auto a = run_in_memory(c, default_bench_world());
  const auto b = run_in_memory(c, default_bench_world());
  EXPECT_EQ(a, b);
  c.net_model.seed = 100;
  EXPECT_TRUE(run_in_memory(c, default_bench_world()).converged);
}

TEST(Harness, PresenceDoesNotDisturbSync) {
  ScenarioConfig c = small(8, 30);
  c.action_rate = 40.0;
  const auto quiet = run_in_memory(c, default_bench_world());
  c.presence_rate = 10.0;
  const auto busy = run_in_memory(c, default_bench_world());
  EXPECT_EQ(busy.delivered_events, quiet.delivered_events);
  EXPECT_EQ(busy.final_digest, quiet.final_digest);
  EXPECT_TRUE(busy.converged);
  EXPECT_GT(busy.messages, quiet.messages);
}

TEST(Harness, FanOutScalesAsMTimesNMinusOne) {
  for (std::size_t n : {2u, 5u, 17u, 40u}) {
    for (std::size_t m : {1u, 7u, 25u}) {
      ScenarioConfig c = small(n, m);
      c.n_instructors = n > 3 ? 3 : 1;
      const auto r = run_in_memory(c, default_bench_world());
      EXPECT_EQ(r.delivered_events, m * (n - 1)) << n << "x" << m;
      EXPECT_EQ(r.acks, m);
      EXPECT_TRUE(r.converged);
    }
  }
}

TEST(Harness, ConfigValidation) {
  auto rejects = [](ScenarioConfig c) {
    try {
      c.validate();
    } catch (const Error& e) {
      return e.code() == ErrorCode::InvalidConfig;
    }
    return false;
  };
  ScenarioConfig c = small(3, 3);
  EXPECT_NO_THROW(c.validate());
  c.n_clients = 0;
  EXPECT_TRUE(rejects(c));
  c = small(kMaxScenarioClients + 1, 1);
  EXPECT_TRUE(rejects(c));
  c = small(3, 3);
  c.n_instructors = 0;
  EXPECT_TRUE(rejects(c));
  c = small(3, 3);
  c.n_instructors = 4;
  EXPECT_TRUE(rejects(c));
  c = small(3, 3);
  c.action_rate = -1;
  EXPECT_TRUE(rejects(c));
}

TEST(Harness, Percentiles) {
  EXPECT_FALSE(summarize_latencies({}));
  const auto one = summarize_latencies({3.0});
  EXPECT_EQ(*one, (LatencySummary{3.0, 3.0, 3.0, 3.0}));
  std::vector<double> samples;
  for (int i = 100; i >= 1; --i) samples.push_back(i);
  const auto s = *summarize_latencies(samples);
  EXPECT_EQ(s.p50, 50.0);
  EXPECT_EQ(s.p95, 95.0);
  EXPECT_EQ(s.p99, 99.0);
  EXPECT_EQ(s.max, 100.0);
  EXPECT_LE(s.p50, s.p95);
  EXPECT_LE(s.p95, s.p99);
  EXPECT_LE(s.p99, s.max);
}

TEST(Harness, VerifyConvergence) {
  const StateDigest a{"aa"};
  const StateDigest b{"bb"};
  EXPECT_TRUE(verify_convergence(std::vector<StateDigest>{a}));
  EXPECT_TRUE(verify_convergence(std::vector<StateDigest>{a, a, a}));
  EXPECT_FALSE(verify_convergence(std::vector<StateDigest>{a, a, b}));
  EXPECT_THROW(verify_convergence(std::vector<StateDigest>{}), std::invalid_argument);
}

TEST(Harness, ReportRoundTripAndFiles) {
  ScenarioConfig c = small(5, 12);
  c.net_model = {3.0, 2.0, 7};
  const auto r = run_in_memory(c, default_bench_world());
  EXPECT_EQ(MetricsReport::from_json(r.to_json()), r);
  MetricsReport empty;
  EXPECT_EQ(MetricsReport::from_json(empty.to_json()), empty);

  const auto dir = std::filesystem::temp_directory_path() / "veld_report_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "run.json").string();
  emit_report(r, path);
  std::ifstream in(path);
  EXPECT_EQ(MetricsReport::from_json(Json::parse(in)), r);
  EXPECT_TRUE(std::filesystem::exists(path + ".txt"));
  EXPECT_NE(r.table().find("delivered_events"), std::string::npos);
  std::filesystem::remove_all(dir);

  try {
    emit_report(r, "/nonexistent-dir/x/run.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

}  // namespace
}  // namespace veld
