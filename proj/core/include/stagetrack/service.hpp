#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <istream>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "stagetrack/event_log.hpp"
#include "stagetrack/pipeline.hpp"
#include "stagetrack/sim.hpp"
#include "stagetrack/telemetry.hpp"
#include "stagetrack/wire.hpp"

namespace stagetrack::service {

struct SourceFrame {
  FrameIndex frame = 0;
  std::int64_t timestamp_ms = 0;
  std::vector<TagInput> inputs;
  std::vector<Diagnostic> diagnostics;
};

/// Producer of pipeline input frames.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// nullopt once exhausted.
  virtual std::optional<SourceFrame> next() = 0;
  virtual bool is_simulation() const { return false; }
  /// Only simulation sources accept this; others return false.
  virtual bool move_tag(TagId, double, double) { return false; }
};

/// Wire-format byte stream (capture file or serial device path). Position
/// reports become fixes; range reports are grouped per tag and solved by the
/// pipeline. Frames are delimited by changes of timestamp.
class CaptureSource : public FrameSource {
 public:
  CaptureSource(const std::filesystem::path& path, const StageConfig& stage,
                std::size_t chunk_size = 4096);
  ~CaptureSource() override;
  std::optional<SourceFrame> next() override;

 private:
  bool fill();
  std::unique_ptr<std::istream> in_;
  StageConfig stage_;
  std::size_t chunk_size_;
  wire::StreamDecoder decoder_;
  std::deque<wire::Frame> queue_;
  wire::DecodeDiagnostics reported_;
  FrameIndex frame_ = 0;
  bool eof_ = false;
};

/// Replays the fix records of an event log, one log frame per output frame.
class ReplaySource : public FrameSource {
 public:
  explicit ReplaySource(const std::vector<stagetrack::log::Record>& records);
  std::optional<SourceFrame> next() override;

 private:
  std::vector<SourceFrame> frames_;
  std::size_t pos_ = 0;
};

class SimulationSource : public FrameSource {
 public:
  SimulationSource(World world, double duration_s);
  std::optional<SourceFrame> next() override;
  bool is_simulation() const override { return true; }
  bool move_tag(TagId tag, double x, double y) override;

 private:
  World world_;
  FrameIndex frame_ = 0;
  FrameIndex end_frame_;
};

struct ServiceOptions {
  std::uint16_t port = 7878;  // 0 = ephemeral
  double fps = 30.0;
  double speed = 1.0;  // pacing multiplier; <= 0 runs unpaced
  int wait_for_clients = 0;
  bool exit_when_done = false;
  std::size_t client_queue_capacity = 4096;
};

/// Telemetry/command service: one pipeline worker owns all state machines;
/// each client has its own reader and writer thread and talks to the worker
/// through queues only.
class Service {
 public:
  Service(ServiceOptions options, PipelineConfig pipeline, std::unique_ptr<FrameSource> source);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and listens. Returns an error text (e.g. port in use) on failure.
  std::optional<std::string> start();
  std::uint16_t port() const { return bound_port_; }
  /// Blocks until the source is exhausted and (with exit_when_done) all
  /// queued telemetry is flushed, or until stop().
  void wait();
  void stop();

 private:
  struct PendingCommand {
    int client_id;
    std::string line;
  };
  struct Connection;

  void accept_loop();
  void pipeline_loop();
  void handle_command(const PendingCommand& cmd, FrameIndex frame);
  void publish(const telemetry::Message& m);
  void send_to(int client, const telemetry::Message& m);
  std::int64_t wallclock_ms() const;
  void reap_connections(bool all);

  ServiceOptions options_;
  Pipeline pipeline_;
  std::unique_ptr<FrameSource> source_;
  telemetry::Hub hub_;

  int listen_fd_ = -1;
  std::uint16_t bound_port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<bool> done_{false};
  std::thread acceptor_;
  std::thread worker_;

  std::mutex conn_mu_;
  std::vector<std::unique_ptr<Connection>> connections_;
  std::atomic<int> connected_{0};

  std::mutex cmd_mu_;
  std::vector<PendingCommand> commands_;

  std::mutex done_mu_;
  std::condition_variable done_cv_;
  bool paused_ = false;  // worker thread only
};

}  // namespace stagetrack::service
