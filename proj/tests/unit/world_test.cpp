#include <gtest/gtest.h>

#include "server_fixture.hpp"
#include "veld/error.hpp"
#include "veld/world.hpp"

namespace veld {
namespace {

Json lesson(const std::string& name) {
  return {{"name", name},
          {"bounds", {{"min", {-10, 0, -10}}, {"max", {10, 5, 10}}}},
          {"spawn", {0, 0, 0}},
          {"apps", {"slides"}},
          {"central", "slides"},
          {"pods", Json::array()},
          {"portals", Json::array()},
          {"decor", Json::array()}};
}

Json two_lessons() {
  Json a = lesson("a");
  a["portals"] = {{{"position", {5, 0, 0}}, {"target", "b"}}};
  Json b = lesson("b");
  b["spawn"] = {2, 0, 2};
  b["portals"] = {{{"position", {-5, 0, 0}}, {"target", "a"}}};
  return {{"lessons", {a, b}}};
}

ErrorCode load_error(const Json& config) {
  try {
    World::load(config.dump());
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "config was accepted: " << config.dump();
  return ErrorCode::IoError;
}

TEST(World, MinimalTwoLessonWorld) {
  const World w = World::load(two_lessons().dump());
  ASSERT_EQ(w.lessons().size(), 2u);
  EXPECT_EQ(w.find("b")->spawn, (Vec3{2, 0, 2}));
  EXPECT_EQ(w.portal_activation_distance(), 1.5);
  EXPECT_EQ(w.find("ghost"), nullptr);
}

TEST(World, EachViolationMapsToOneError) {
  EXPECT_EQ(load_error(Json::parse("[]")), ErrorCode::ParseError);
  try {
    World::load("{not json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }

  Json c = two_lessons();
  c["lessons"][0]["portals"][0]["target"] = "ghost";
  EXPECT_EQ(load_error(c), ErrorCode::DanglingPortal);

  c = two_lessons();
  c["lessons"][1]["name"] = "a";
  EXPECT_EQ(load_error(c), ErrorCode::DuplicateName);

  c = two_lessons();
  c["lessons"][0]["portals"][0]["target"] = "a";
  EXPECT_EQ(load_error(c), ErrorCode::SelfPortal);

  c = two_lessons();
  c["lessons"][0]["spawn"] = {50, 0, 0};
  EXPECT_EQ(load_error(c), ErrorCode::SpawnOutOfBounds);

  c = two_lessons();
  c["lessons"][0]["bounds"]["min"] = {20, 0, 0};
  EXPECT_EQ(load_error(c), ErrorCode::InvalidBounds);

  c = two_lessons();
  c["lessons"][0]["central"] = "faceoff";
  EXPECT_EQ(load_error(c), ErrorCode::InvalidApps);

  c = two_lessons();
  c["lessons"][0]["apps"] = {"slides", "whiteboard"};
  EXPECT_EQ(load_error(c), ErrorCode::InvalidApps);

  c = two_lessons();
  c["lessons"][0]["pods"] = {{{"id", "p"}, {"center", {0, 0, 0}}, {"radius", 0}}};
  EXPECT_EQ(load_error(c), ErrorCode::InvalidPodRadius);

  c = two_lessons();
  c["lessons"][0]["pods"] = {{{"id", "p"}, {"center", {99, 0, 0}}, {"radius", 1}}};
  EXPECT_EQ(load_error(c), ErrorCode::PodOutOfBounds);

  c = two_lessons();
  c["lessons"][0]["pods"] = {{{"id", "p"}, {"center", {0, 0, 0}}, {"radius", 1}},
                             {{"id", "p"}, {"center", {1, 0, 0}}, {"radius", 1}}};
  EXPECT_EQ(load_error(c), ErrorCode::DuplicatePod);

  c = two_lessons();
  c["lessons"][0]["portals"][0]["position"] = {0, 0, 99};
  EXPECT_EQ(load_error(c), ErrorCode::PortalOutOfBounds);

  c = two_lessons();
  c["audio_zone"] = {{"coef", 2.0}, {"ref_distance", 1.0}, {"epsilon", 0.1}};
  EXPECT_EQ(load_error(c), ErrorCode::InvalidAudioZone);

  c = two_lessons();
  c["portal_activation_distance"] = -1;
  EXPECT_EQ(load_error(c), ErrorCode::InvalidConfig);
}

TEST(World, SerializeRoundTrip) {
  const World w = testing::test_world();
  EXPECT_EQ(World::load(w.serialize()), w);
  const World x = World::load(two_lessons().dump());
  EXPECT_EQ(World::load(x.serialize()), x);
}

TEST(World, BundledConfigLoads) {
  const World w = World::load_file(VELD_DATA_DIR "/world.json");
  EXPECT_NE(w.find("unit2-island"), nullptr);
  EXPECT_NE(w.find("orientation"), nullptr);
}

TEST(World, Teleport) {
  const World w = World::load(two_lessons().dump());
  EXPECT_EQ(resolve_teleport(w, "b"), (Relocation{"b", {2, 0, 2}}));
  EXPECT_EQ(resolve_teleport(w, "a"), (Relocation{"a", {0, 0, 0}}));
  try {
    resolve_teleport(w, "ghost");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownRoom);
  }
}

TEST(World, Portals) {
  const World w = World::load(two_lessons().dump());
  EXPECT_EQ(resolve_portal(w, "a", 0, {5, 0, 0}), (Relocation{"b", {2, 0, 2}}));
  EXPECT_EQ(resolve_portal(w, "a", 0, {5, 0, 1.5}), (Relocation{"b", {2, 0, 2}}));
  // Two hops come back to the first lesson's spawn.
  const auto there = resolve_portal(w, "a", 0, {5, 0, 0});
  EXPECT_EQ(resolve_portal(w, there.lesson, 0, {-5, 0, 0}), (Relocation{"a", {0, 0, 0}}));

  auto code_of = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code_of([&] { resolve_portal(w, "a", 0, {-5, 0, 0}); }), ErrorCode::TooFar);
  EXPECT_EQ(code_of([&] { resolve_portal(w, "a", 3, {5, 0, 0}); }), ErrorCode::UnknownPortal);
  EXPECT_EQ(code_of([&] { resolve_portal(w, "ghost", 0, {0, 0, 0}); }), ErrorCode::UnknownRoom);
}

TEST(World, PodAssignment) {
  const World w = testing::test_world();
  const LessonModule& island = *w.find("unit2-island");
  EXPECT_NO_THROW(validate_pod_assignment(island, {{"c1", "pod-1"}, {"c2", "pod-3"}}));
  try {
    validate_pod_assignment(island, {{"c1", "pod-9"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownPod);
  }
}

}  // namespace
}  // namespace veld
