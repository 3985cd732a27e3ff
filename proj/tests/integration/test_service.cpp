#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "cli.hpp"
#include "stagetrack/service.hpp"
#include "stagetrack/simulation.hpp"
#include "stagetrack/stage.hpp"
#include "stagetrack/wire.hpp"

using namespace stagetrack;
using namespace stagetrack::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kData{STAGETRACK_DATA_DIR};

class Client {
 public:
  explicit Client(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    REQUIRE(::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
  }
  ~Client() { ::close(fd_); }

  void send(const std::string& line) {
    const std::string s = line + "\n";
    REQUIRE(::send(fd_, s.data(), s.size(), MSG_NOSIGNAL) == static_cast<ssize_t>(s.size()));
  }

  /// Next telemetry message, or nullopt on EOF/timeout.
  std::optional<json> next(int timeout_ms = 5000) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (true) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        const std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        return json::parse(line);
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) return std::nullopt;
      char tmp[4096];
      const ssize_t n = ::recv(fd_, tmp, sizeof(tmp), 0);
      if (n <= 0) return std::nullopt;
      buf_.append(tmp, static_cast<std::size_t>(n));
    }
  }

  /// Skips messages until `pred` holds.
  std::optional<json> until(const std::function<bool(const json&)>& pred, int timeout_ms = 5000) {
    while (auto m = next(timeout_ms)) {
      if (pred(*m)) return m;
    }
    return std::nullopt;
  }

 private:
  int fd_ = -1;
  std::string buf_;
};

bool is_diag(const json& m, const std::string& code) {
  return m.at("kind") == "diag" && m.at("payload").value("code", "") == code;
}

SimulationSetup parked_setup(double duration) {
  SimulationSetup s;
  s.stage = load_stage_config(kData / "configs" / "puzzle.json");
  s.script = load_motion_script(kData / "scripts" / "parked.json");
  s.script.tags.erase(2);
  s.script.tags.erase(3);
  s.duration_s = duration;
  return s;
}

PipelineConfig pipeline_for(const StageConfig& stage) {
  PipelineConfig pc;
  pc.stage = stage;
  return pc;
}

ServiceOptions options(double speed, int wait, bool exit_when_done) {
  ServiceOptions o;
  o.port = 0;
  o.speed = speed;
  o.wait_for_clients = wait;
  o.exit_when_done = exit_when_done;
  return o;
}

}  // namespace

TEST_CASE("replay of 100 fixes reaches a client in order") {
  const SimulationResult sim = run_simulation(parked_setup(100.0 / 30.0));
  int fixes = 0;
  for (const auto& r : sim.records) fixes += r.at("kind") == "fix";
  REQUIRE(fixes == 100);

  Service svc(options(0, 1, true), pipeline_for(parse_stage_config(sim.records.front().at("config"))),
              std::make_unique<ReplaySource>(sim.records));
  REQUIRE_FALSE(svc.start().has_value());
  Client c(svc.port());
  int positions = 0;
  FrameIndex last = -1;
  FrameIndex last_any = -1;
  bool ordered = true;
  while (auto m = c.next()) {
    if (is_diag(*m, "end_of_source")) break;
    const FrameIndex f = m->at("frame");
    ordered = ordered && f >= last_any;
    last_any = f;
    if (m->at("kind") == "position") {
      CHECK(f > last);
      last = f;
      ++positions;
    }
  }
  CHECK(ordered);
  CHECK(positions == 100);
  svc.wait();
}

TEST_CASE("snapshot, force_scene, malformed commands, rejected move_tag") {
  const SimulationResult sim = run_simulation(parked_setup(20));
  Service svc(options(1.0, 1, false), pipeline_for(parse_stage_config(sim.records.front().at("config"))),
              std::make_unique<ReplaySource>(sim.records));
  REQUIRE_FALSE(svc.start().has_value());
  Client c(svc.port());

  const auto snap = c.next();
  REQUIRE(snap.has_value());
  CHECK(snap->at("kind") == "scene");
  CHECK(snap->at("payload").at("snapshot") == true);
  CHECK(snap->at("payload").at("current") == "act1");

  c.until([](const json& m) { return m.at("kind") == "position"; });
  c.send(R"({"kind":"force_scene","scene_id":"act3","issued_at":1})");
  const auto scene = c.until([](const json& m) { return m.at("kind") == "scene"; });
  REQUIRE(scene.has_value());
  CHECK(scene->at("payload").at("forced") == true);
  CHECK(scene->at("payload").at("from") == "act1");
  CHECK(scene->at("payload").at("to") == "act3");
  const auto ack = c.until([](const json& m) { return m.at("kind") == "diag"; });
  REQUIRE(ack.has_value());
  CHECK(is_diag(*ack, "ack"));

  c.send("this is not json");
  const auto bad = c.until([](const json& m) { return m.at("kind") == "diag"; });
  REQUIRE(bad.has_value());
  CHECK(is_diag(*bad, "malformed_command"));

  c.send(R"({"kind":"force_scene","scene_id":"nowhere"})");
  const auto unknown = c.until([](const json& m) { return m.at("kind") == "diag"; });
  REQUIRE(unknown.has_value());
  CHECK(is_diag(*unknown, "rejected"));

  c.send(R"({"kind":"move_tag","tag_id":1,"x_m":5,"y_m":5})");
  const auto rej = c.until([](const json& m) { return m.at("kind") == "diag"; });
  REQUIRE(rej.has_value());
  CHECK(is_diag(*rej, "rejected"));
  CHECK(rej->at("payload").at("command") == "move_tag");

  // connection is still usable
  c.send(R"({"kind":"coverage"})");
  const auto cov = c.until([](const json& m) { return m.at("kind") == "coverage"; });
  REQUIRE(cov.has_value());
  CHECK(cov->at("payload").at("nx") == 42);
  CHECK(cov->at("payload").at("covered").size() == 42u * 42u);

  c.send(R"({"kind":"pause"})");
  CHECK(c.until([](const json& m) { return is_diag(m, "ack"); }).has_value());
  c.send(R"({"kind":"resume"})");
  CHECK(c.until([](const json& m) { return is_diag(m, "ack"); }).has_value());
  svc.stop();
}

TEST_CASE("simulated drag latches after the dwell") {
  const StageConfig stage = load_stage_config(kData / "configs" / "puzzle.json");
  MotionScript script;
  script.tags[1] = {Waypoint{0.0, Vec3{2.0, 6.0, 0.2}}};
  World world(stage, script, NoiseModel{}, 42, 30.0);
  ServiceOptions o = options(6.0, 1, false);
  Service svc(o, pipeline_for(stage), std::make_unique<SimulationSource>(std::move(world), 30.0));
  REQUIRE_FALSE(svc.start().has_value());
  Client c(svc.port());
  c.until([](const json& m) { return m.at("kind") == "track"; });
  c.send(R"({"kind":"move_tag","tag_id":1,"x_m":3.2,"y_m":4.0})");
  const auto ack = c.until([](const json& m) { return m.at("kind") == "diag" && m.at("payload").value("command", "") == "move_tag"; });
  REQUIRE(ack.has_value());
  CHECK(is_diag(*ack, "ack"));
  const auto latch = c.until([](const json& m) { return m.at("kind") == "zone_event"; }, 20000);
  REQUIRE(latch.has_value());
  CHECK(latch->at("payload").at("zone") == "Z1");
  CHECK(latch->at("payload").at("event") == "Latched");
  svc.stop();
}

TEST_CASE("capture with one corrupted frame") {
  std::vector<std::uint8_t> bytes;
  for (std::uint32_t i = 0; i < 30; ++i) {
    wire::append_frame(bytes, wire::PositionReport{1, static_cast<std::uint8_t>(i), i * 33, 3200, 4000, 200, 150});
    wire::append_frame(bytes, wire::Status{1, static_cast<std::uint8_t>(i), i * 33, 90, 0});
  }
  const std::size_t frame_len = wire::encoded_size(wire::FrameType::Position) + wire::encoded_size(wire::FrameType::Status);
  bytes[10 * frame_len + 12] ^= 0x40;  // payload byte of the 11th position report
  const fs::path path = fs::temp_directory_path() / "stagetrack_corrupt.bin";
  {
    std::ofstream o(path, std::ios::binary);
    o.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  const StageConfig stage = load_stage_config(kData / "configs" / "puzzle.json");
  Service svc(options(0, 1, true), pipeline_for(stage), std::make_unique<CaptureSource>(path, stage, 64));
  REQUIRE_FALSE(svc.start().has_value());
  Client c(svc.port());
  int positions = 0;
  std::optional<json> decode;
  while (auto m = c.next()) {
    if (is_diag(*m, "end_of_source")) break;
    if (m->at("kind") == "position") ++positions;
    if (is_diag(*m, "decode") && !decode) decode = m;
  }
  REQUIRE(decode.has_value());
  CHECK(decode->at("payload").at("crc_failures") == 1);
  CHECK(decode->at("payload").at("message").get<std::string>().find("crc_failures=1") != std::string::npos);
  CHECK(positions == 29);
  svc.wait();
}

TEST_CASE("port in use") {
  Service first(options(1.0, 1, false), pipeline_for(load_stage_config(kData / "configs" / "puzzle.json")),
                std::make_unique<ReplaySource>(std::vector<stagetrack::log::Record>{}));
  REQUIRE_FALSE(first.start().has_value());

  cli::ServeArgs args;
  args.replay = fs::temp_directory_path() / "stagetrack_port.ndjson";
  {
    std::ofstream o(*args.replay);
    stagetrack::log::write(o, run_simulation(parked_setup(1)).records);
  }
  args.port = first.port();
  std::ostringstream out, err;
  CHECK(cli::cmd_serve(args, out, err) != 0);
  CHECK(err.str().find("port") != std::string::npos);
  first.stop();
}

TEST_CASE("two clients see the same ordered stream") {
  const SimulationResult sim = run_simulation(parked_setup(3));
  Service svc(options(0, 2, true), pipeline_for(parse_stage_config(sim.records.front().at("config"))),
              std::make_unique<ReplaySource>(sim.records));
  REQUIRE_FALSE(svc.start().has_value());
  Client a(svc.port());
  Client b(svc.port());
  auto collect = [](Client& c) {
    std::vector<std::string> lines;
    while (auto m = c.next()) {
      if (is_diag(*m, "end_of_source")) break;
      if (m->at("kind") != "position" && m->at("kind") != "track") continue;
      m->erase("wallclock_ms");
      lines.push_back(m->dump());
    }
    return lines;
  };
  const auto la = collect(a);
  const auto lb = collect(b);
  CHECK(la.size() == 180);
  CHECK(la == lb);
  svc.wait();
}
