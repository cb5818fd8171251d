#include <gtest/gtest.h>

#include "server_fixture.hpp"
#include "veld/harness.hpp"
#include "veld/tcp.hpp"

namespace veld {
namespace {

struct LiveServer {
  SyncServer sync{testing::test_config(150, 20.0), testing::test_world()};
  TcpServer tcp{sync, 0, 2, "127.0.0.1"};
};

wire::ServerMessage next(BlockingLineClient& c) {
  auto line = c.next_line();
  if (!line) throw std::runtime_error("no line from server");
  return wire::parse_server_message(*line);
}

TEST(Tcp, HelloJoinAction) {
  LiveServer s;
  BlockingLineClient teacher("127.0.0.1", s.tcp.port());
  BlockingLineClient pupil("127.0.0.1", s.tcp.port());

  teacher.send(wire::encode(wire::ClientMessage{wire::Hello{testing::kToken, "t"}}));
  auto w = std::get<wire::Welcome>(next(teacher));
  EXPECT_EQ(w.role, Role::Instructor);
  pupil.send(wire::encode(wire::ClientMessage{wire::Hello{std::nullopt, "p"}}));
  EXPECT_EQ(std::get<wire::Welcome>(next(pupil)).role, Role::Student);

  teacher.send(wire::encode(wire::ClientMessage{wire::Join{"unit2-island", "slides"}}));
  EXPECT_TRUE(std::holds_alternative<SnapshotMessage>(next(teacher)));
  pupil.send(wire::encode(wire::ClientMessage{wire::Join{"unit2-island", "slides"}}));
  EXPECT_TRUE(std::holds_alternative<SnapshotMessage>(next(pupil)));

  teacher.send(wire::encode(wire::ClientMessage{
      wire::Action{"unit2-island", "slides", "SELECT_DECK", {{"deck_id", "d"}, {"deck_length", 3}}, 1}}));
  // Skip presence chatter until the interesting replies arrive.
  for (;;) {
    auto m = next(teacher);
    if (auto* ack = std::get_if<wire::Ack>(&m)) {
      EXPECT_EQ(ack->seq, 1u);
      break;
    }
  }
  for (;;) {
    auto m = next(pupil);
    if (auto* e = std::get_if<wire::Event>(&m)) {
      EXPECT_EQ(e->action.kind, "SELECT_DECK");
      EXPECT_EQ(e->action.actor_id, w.client_id);
      break;
    }
  }
}

TEST(Tcp, BadHelloClosesTheSocket) {
  LiveServer s;
  BlockingLineClient c("127.0.0.1", s.tcp.port());
  c.send("garbage");
  auto m = next(c);
  ASSERT_TRUE(std::holds_alternative<wire::ErrorReply>(m));
  EXPECT_EQ(std::get<wire::ErrorReply>(m).code, "MalformedHello");
  EXPECT_TRUE(c.wait_closed());
}

TEST(Tcp, OversizedLineClosesTheSocket) {
  LiveServer s;
  BlockingLineClient c("127.0.0.1", s.tcp.port());
  c.send(std::string(2 << 20, 'x'));
  EXPECT_TRUE(c.wait_closed(std::chrono::seconds(10)));
}

TEST(Tcp, ScenarioConvergesWithServer) {
  LiveServer s;
  ScenarioConfig c;
  c.n_clients = 20;
  c.n_instructors = 2;
  c.action_count = 30;
  c.presence_rate = 5;
  c.duration_s = 30;
  c.room = "unit2-island";
  const auto r = run_scenario(c, {"127.0.0.1", s.tcp.port(), testing::kToken, &s.sync});
  EXPECT_TRUE(r.converged);
  // The server's projected digest, taken before the clients hang up, is one of
  // the digests compared.
  EXPECT_EQ(r.distinct_digests, 1u);
  EXPECT_FALSE(r.final_digest.empty());
  EXPECT_EQ(r.delivered_events, 30u * 19u);
  EXPECT_EQ(r.acks, 30u);
  EXPECT_EQ(r.max_seq_gap, 0u);
  EXPECT_EQ(r.transport, "tcp");
}

TEST(Tcp, UnreachableServer) {
  ScenarioConfig c;
  c.n_clients = 2;
  c.room = "unit2-island";
  try {
    run_scenario(c, {"127.0.0.1", 1, "x", nullptr});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConnectFailure);
  }
}

}  // namespace
}  // namespace veld
