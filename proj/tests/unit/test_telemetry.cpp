#include <doctest.h>

#include <thread>

#include "stagetrack/telemetry.hpp"

using namespace stagetrack;
using namespace stagetrack::telemetry;
using nlohmann::json;

TEST_CASE("message line round trip") {
  Message m{Kind::ZoneEvent, json{{"zone", "Z1"}, {"tag", 2}, {"event", "Latched"}}, 42, 1700000000000};
  const std::string line = m.to_line();
  CHECK(line.find('\n') == std::string::npos);
  const auto back = Message::parse(line);
  REQUIRE(back.has_value());
  CHECK(back->kind == Kind::ZoneEvent);
  CHECK(back->frame == 42);
  CHECK(back->wallclock_ms == 1700000000000);
  CHECK(back->payload == m.payload);
  const json j = json::parse(line);
  CHECK(j.at("kind") == "zone_event");
  CHECK(j.size() == 4);
  CHECK_FALSE(Message::parse("{\"kind\":\"nope\"}").has_value());
  CHECK_FALSE(Message::parse("garbage").has_value());
}

TEST_CASE("from_frame preserves log order") {
  FrameOutput out;
  out.frame = 9;
  out.fixes.push_back({1, PositionFix{}});
  out.tracks.push_back({1, TrackState{}, UpdateOutcome::Accepted, 0.5});
  out.zone_events.push_back({"Z1", 1, ZoneEventKind::Latched, 9});
  out.transitions.push_back({"a", "b", 9, false});
  out.diagnostics.push_back({9, TagId{1}, "x", "y"});
  const auto msgs = from_frame(out, 5);
  REQUIRE(msgs.size() == 5);
  CHECK(msgs[0].kind == Kind::Position);
  CHECK(msgs[1].kind == Kind::Track);
  CHECK(msgs[2].kind == Kind::ZoneEvent);
  CHECK(msgs[3].kind == Kind::Scene);
  CHECK(msgs[4].kind == Kind::Diag);
  for (const auto& m : msgs) {
    CHECK(m.frame == 9);
    CHECK_FALSE(m.payload.contains("kind"));
  }
  CHECK(msgs[0].payload.at("tag") == 1);
  CHECK(msgs[3].payload.at("forced") == false);
}

TEST_CASE("command parsing") {
  auto ok = [](const std::string& s) {
    auto r = parse_command(s);
    REQUIRE(std::holds_alternative<OperatorCommand>(r));
    return std::get<OperatorCommand>(r);
  };
  const auto mv = ok(R"({"kind":"move_tag","tag_id":3,"x_m":1.5,"y_m":2.5,"issued_at":99})");
  CHECK(std::get<MoveTag>(mv.body).tag_id == 3);
  CHECK(std::get<MoveTag>(mv.body).y_m == 2.5);
  CHECK(mv.issued_at == 99);
  CHECK(std::get<ForceScene>(ok(R"({"kind":"force_scene","scene_id":"act2"})").body).scene_id == "act2");
  const auto uz = ok(R"({"kind":"update_zone","zone":{"id":"Z1","x_m":1,"y_m":2,"dwell_frames":50}})");
  CHECK(std::get<UpdateZone>(uz.body).zone.dwell_frames == 50);
  CHECK(std::holds_alternative<Pause>(ok(R"({"kind":"pause"})").body));
  CHECK(std::holds_alternative<Resume>(ok(R"({"kind":"resume"})").body));
  CHECK(std::get<RequestCoverage>(ok(R"({"kind":"coverage","cell_size":0.5})").body).options.cell_size == 0.5);

  for (const char* bad : {"", "nonsense", "[1,2]", R"({"kind":"launch"})", R"({"kind":"move_tag","tag_id":1})",
                          R"({"kind":"force_scene","scene_id":7})", R"({"x":1})"}) {
    CHECK(std::holds_alternative<std::string>(parse_command(bad)));
  }

  for (const std::string& s : {std::string(R"({"kind":"move_tag","tag_id":3,"x_m":1.5,"y_m":2.5,"issued_at":99})"),
                               std::string(R"({"kind":"pause","issued_at":1})")}) {
    const auto c = ok(s);
    const auto again = ok(to_line(c));
    CHECK(command_name(again.body) == command_name(c.body));
    CHECK(again.issued_at == c.issued_at);
  }
}

TEST_CASE("hub keeps order and drops slow clients") {
  Hub hub(8);
  const int a = hub.add_client();
  const int b = hub.add_client();
  for (int i = 0; i < 8; ++i) CHECK(hub.publish(std::to_string(i)).empty());
  for (int i = 0; i < 8; ++i) CHECK(hub.pop(a, 0) == std::to_string(i));
  const auto dropped = hub.publish("8");
  REQUIRE(dropped.size() == 1);
  CHECK(dropped[0] == b);
  CHECK(hub.is_dropped(b));
  CHECK_FALSE(hub.is_dropped(a));
  CHECK(hub.pop(a, 0) == "8");
  CHECK_FALSE(hub.pop(b, 0).has_value());
  CHECK_FALSE(hub.send_to(b, "x"));
  CHECK(hub.send_to(a, "x"));
  CHECK_FALSE(hub.all_drained());
  CHECK(hub.pop(a, 0) == "x");
  CHECK(hub.all_drained());
}

TEST_CASE("hub pop wakes on publish") {
  Hub hub;
  const int a = hub.add_client();
  std::thread t([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    hub.publish("hello");
  });
  CHECK(hub.pop(a, 2000) == "hello");
  t.join();
  hub.close_all();
  CHECK_FALSE(hub.pop(a, 1000).has_value());
  hub.remove_client(a);
  CHECK(hub.client_count() == 0);
}
