#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "stagetrack/geometry.hpp"

namespace stagetrack::cli {

struct CoverageArgs {
  std::filesystem::path config;
  CoverageOptions options;
  std::optional<std::filesystem::path> out;  // CSV; stdout when unset
};

struct SimulateArgs {
  std::filesystem::path config;
  std::filesystem::path script;
  std::uint64_t seed = 42;
  double duration_s = 20.0;
  double fps = 30.0;
  std::filesystem::path out;
};

struct ServeArgs {
  std::optional<std::filesystem::path> capture;
  std::optional<std::filesystem::path> replay;
  std::optional<std::filesystem::path> simulate;  // stage config
  std::optional<std::filesystem::path> config;    // stage config for capture
  std::optional<std::filesystem::path> script;
  std::uint64_t seed = 42;
  double duration_s = 20.0;
  double fps = 30.0;
  double speed = 1.0;
  std::uint16_t port = 7878;
  int wait_clients = 0;
  bool exit_when_done = false;
};

struct ReplayCheckArgs {
  std::filesystem::path log;
};

int cmd_coverage(const CoverageArgs& args, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_serve(const ServeArgs& args, std::ostream& out, std::ostream& err);
int cmd_replay_check(const ReplayCheckArgs& args, std::ostream& out, std::ostream& err);

}  // namespace stagetrack::cli
