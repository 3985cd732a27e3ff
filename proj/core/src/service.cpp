#include "stagetrack/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>

#include "stagetrack/error.hpp"
#include "stagetrack/event_log.hpp"
#include "stagetrack/geometry.hpp"
#include "stagetrack/simulation.hpp"

namespace stagetrack::service {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kLiveRangeSigma = 0.25;  // m, matches the calibrated LOS noise

bool send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

Diagnostic decode_diag(FrameIndex frame, const wire::DecodeDiagnostics& d) {
  Diagnostic diag{frame, std::nullopt, "decode",
                  "crc_failures=" + std::to_string(d.crc_failures) + " resyncs=" + std::to_string(d.resyncs) +
                      " bytes_skipped=" + std::to_string(d.bytes_skipped)};
  diag.data = {{"frames_ok", d.frames_ok},
               {"crc_failures", d.crc_failures},
               {"resyncs", d.resyncs},
               {"bytes_skipped", d.bytes_skipped}};
  return diag;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sources

CaptureSource::CaptureSource(const std::filesystem::path& path, const StageConfig& stage,
                             std::size_t chunk_size)
    : in_(std::make_unique<std::ifstream>(path, std::ios::binary)), stage_(stage), chunk_size_(chunk_size) {
  if (!*in_) throw Error(ErrorCode::InvalidConfig, "cannot open capture " + path.string());
}

CaptureSource::~CaptureSource() = default;

bool CaptureSource::fill() {
  if (eof_) return false;
  std::vector<std::uint8_t> buf(chunk_size_);
  in_->read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  const auto got = static_cast<std::size_t>(in_->gcount());
  buf.resize(got);
  std::vector<wire::Frame> frames = decoder_.feed(buf);
  if (got < chunk_size_) {
    eof_ = true;
    auto tail = decoder_.finish();
    frames.insert(frames.end(), tail.begin(), tail.end());
  }
  queue_.insert(queue_.end(), frames.begin(), frames.end());
  return true;
}

std::optional<SourceFrame> CaptureSource::next() {
  // Pull until the first timestamp group is known to be complete.
  while (true) {
    if (!queue_.empty()) {
      const std::uint32_t ts = wire::frame_timestamp(queue_.front());
      bool complete = false;
      for (const auto& f : queue_) {
        if (wire::frame_timestamp(f) != ts) {
          complete = true;
          break;
        }
      }
      if (complete || eof_) break;
    } else if (eof_) {
      break;
    }
    fill();
  }

  SourceFrame out;
  out.frame = frame_;
  if (!(decoder_.diagnostics() == reported_)) {
    // frames_ok alone is not news
    const auto& d = decoder_.diagnostics();
    if (d.crc_failures != reported_.crc_failures || d.resyncs != reported_.resyncs ||
        d.bytes_skipped != reported_.bytes_skipped) {
      out.diagnostics.push_back(decode_diag(frame_, d));
    }
    reported_ = d;
  }
  if (queue_.empty()) {
    if (!out.diagnostics.empty()) {
      ++frame_;
      return out;
    }
    return std::nullopt;
  }

  const std::uint32_t ts = wire::frame_timestamp(queue_.front());
  out.timestamp_ms = ts;
  std::map<TagId, TagInput> inputs;
  while (!queue_.empty() && wire::frame_timestamp(queue_.front()) == ts) {
    const wire::Frame f = queue_.front();
    queue_.pop_front();
    const TagId tag = wire::frame_tag(f);
    TagInput& in = inputs[tag];
    in.tag_id = tag;
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, wire::PositionReport>) {
            PositionFix fix;
            fix.position = Vec3(v.x_mm, v.y_mm, v.z_mm) / 1000.0;
            const double e = v.err_mm / 1000.0;
            fix.covariance.setZero();
            fix.covariance(0, 0) = e * e;
            fix.covariance(1, 1) = e * e;
            fix.residual_rms = e;
            fix.timestamp_ms = v.timestamp_ms;
            in.fix = fix;
          } else if constexpr (std::is_same_v<T, wire::RangeReport>) {
            if (const Anchor* a = stage_.find_anchor(v.anchor_id)) {
              in.ranges.push_back(RangeObservation{a->position, v.range_mm / 1000.0, kLiveRangeSigma});
            } else {
              out.diagnostics.push_back(Diagnostic{frame_, tag, "UnknownAnchor",
                                                   "range to unknown anchor " + std::to_string(v.anchor_id)});
            }
          } else if constexpr (std::is_same_v<T, wire::ImuReport>) {
            ImuSample s;
            for (int k = 0; k < 3; ++k) {
              s.accel[k] = v.accel_mg[k] * 1e-3 * kStandardGravity;
              s.gyro[k] = v.gyro_cdps[k] * 0.01 * std::numbers::pi / 180.0;
              s.mag[k] = v.mag_dut[k] * 0.1;
            }
            s.timestamp_ms = v.timestamp_ms;
            in.imu = s;
          } else {
            Diagnostic d{frame_, tag, "status", "battery " + std::to_string(v.battery_pct) + "%"};
            d.data = {{"battery_pct", v.battery_pct}, {"flags", v.flags}};
            out.diagnostics.push_back(std::move(d));
          }
        },
        f);
  }
  for (auto& [tag, in] : inputs) {
    // IMU/status-only tags carry no position information this frame.
    if (in.fix || !in.ranges.empty() || in.imu) out.inputs.push_back(std::move(in));
  }
  ++frame_;
  return out;
}

ReplaySource::ReplaySource(const std::vector<log::Record>& records) {
  std::map<FrameIndex, SourceFrame> frames;
  for (const log::Record& r : records) {
    if (r.value("kind", "") != "fix") continue;
    const FrameIndex f = r.at("frame").get<FrameIndex>();
    SourceFrame& sf = frames[f];
    sf.frame = f;
    TagInput in;
    in.tag_id = r.at("tag").get<TagId>();
    in.fix = log::parse_fix(r);
    sf.timestamp_ms = in.fix->timestamp_ms;
    sf.inputs.push_back(std::move(in));
  }
  for (auto& [f, sf] : frames) frames_.push_back(std::move(sf));
}

std::optional<SourceFrame> ReplaySource::next() {
  if (pos_ >= frames_.size()) return std::nullopt;
  return frames_[pos_++];
}

SimulationSource::SimulationSource(World world, double duration_s)
    : world_(std::move(world)),
      end_frame_(static_cast<FrameIndex>(std::llround(duration_s * world_.fps()))) {}

std::optional<SourceFrame> SimulationSource::next() {
  if (frame_ >= end_frame_) return std::nullopt;
  SimFrameOutput sim = world_.tick(frame_);
  SourceFrame out;
  out.frame = frame_;
  out.timestamp_ms = static_cast<std::int64_t>(std::llround(world_.time_of(frame_) * 1000.0));
  out.inputs = pipeline_inputs(sim, world_.stage());
  ++frame_;
  return out;
}

bool SimulationSource::move_tag(TagId tag, double x, double y) {
  world_.move_tag(tag, x, y);
  return true;
}

// ---------------------------------------------------------------------------
// Service

struct Service::Connection {
  int fd = -1;
  int client_id = 0;
  std::thread reader;
  std::thread writer;
  std::atomic<bool> reader_done{false};
  std::atomic<bool> writer_done{false};
};

Service::Service(ServiceOptions options, PipelineConfig pipeline, std::unique_ptr<FrameSource> source)
    : options_(options),
      pipeline_(std::move(pipeline)),
      source_(std::move(source)),
      hub_(options.client_queue_capacity) {}

Service::~Service() { stop(); }

std::int64_t Service::wallclock_ms() const {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::optional<std::string> Service::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) return std::string("socket: ") + std::strerror(errno);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(options_.port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    return "cannot bind port " + std::to_string(options_.port) + ": " + err;
  }
  if (::listen(listen_fd_, 16) < 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    return "listen: " + err;
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port_ = ntohs(addr.sin_port);

  acceptor_ = std::thread([this] { accept_loop(); });
  worker_ = std::thread([this] { pipeline_loop(); });
  return std::nullopt;
}

void Service::accept_loop() {
  while (!stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 50);
    reap_connections(false);
    if (ready <= 0 || !(pfd.revents & POLLIN)) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    timeval tv{2, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));

    auto conn = std::make_unique<Connection>();
    conn->fd = fd;
    conn->client_id = hub_.add_client();
    Connection* c = conn.get();
    {
      std::lock_guard lock(cmd_mu_);
      commands_.push_back(PendingCommand{c->client_id, "__connect__"});
    }
    c->writer = std::thread([this, c] {
      while (true) {
        auto line = hub_.pop(c->client_id, 50);
        if (line) {
          if (!send_all(c->fd, *line + "\n")) break;
          continue;
        }
        if (hub_.is_dropped(c->client_id)) break;
        if (stopping_ && hub_.all_drained()) break;
      }
      ::shutdown(c->fd, SHUT_WR);
      c->writer_done = true;
    });
    c->reader = std::thread([this, c] {
      std::string pending;
      char buf[1024];
      while (true) {
        const ssize_t n = ::recv(c->fd, buf, sizeof(buf), 0);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        pending.append(buf, static_cast<std::size_t>(n));
        std::size_t nl;
        while ((nl = pending.find('\n')) != std::string::npos) {
          std::string line = pending.substr(0, nl);
          pending.erase(0, nl + 1);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (line.empty()) continue;
          std::lock_guard lock(cmd_mu_);
          commands_.push_back(PendingCommand{c->client_id, std::move(line)});
        }
      }
      c->reader_done = true;
    });
    ++connected_;
    std::lock_guard lock(conn_mu_);
    connections_.push_back(std::move(conn));
  }
}

void Service::reap_connections(bool all) {
  std::vector<std::unique_ptr<Connection>> finished;
  {
    std::lock_guard lock(conn_mu_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      Connection& c = **it;
      const bool gone = all || (c.reader_done && c.writer_done) || (c.writer_done && hub_.is_dropped(c.client_id));
      if (gone) {
        finished.push_back(std::move(*it));
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& c : finished) {
    if (c->writer.joinable()) c->writer.join();
    ::shutdown(c->fd, SHUT_RDWR);
    if (c->reader.joinable()) c->reader.join();
    ::close(c->fd);
    hub_.remove_client(c->client_id);
  }
}

void Service::publish(const telemetry::Message& m) {
  for (int dropped : hub_.publish(m.to_line())) {
    Diagnostic d{m.frame, std::nullopt, "client_dropped", "telemetry queue overflow"};
    d.data = {{"client", dropped}};
    hub_.publish(telemetry::from_diag(d, wallclock_ms()).to_line());
  }
}

void Service::send_to(int client, const telemetry::Message& m) { hub_.send_to(client, m.to_line()); }

void Service::handle_command(const PendingCommand& pc, FrameIndex frame) {
  auto reply = [&](const std::string& code, const std::string& command, const std::string& message) {
    Diagnostic d{frame, std::nullopt, code, message};
    d.data = {{"command", command}};
    send_to(pc.client_id, telemetry::from_diag(d, wallclock_ms()));
  };

  if (pc.line == "__connect__") {
    // Snapshot so a (re)connecting consumer can rebuild its view from the stream alone.
    const ShowState& st = pipeline_.show_state();
    json payload{{"current", st.current_scene}, {"snapshot", true}, {"history_len", st.history.size()}};
    send_to(pc.client_id, telemetry::Message{telemetry::Kind::Scene, payload, frame, wallclock_ms()});
    return;
  }

  auto parsed = telemetry::parse_command(pc.line);
  if (auto* err = std::get_if<std::string>(&parsed)) {
    reply("malformed_command", "", *err);
    return;
  }
  const telemetry::OperatorCommand& cmd = std::get<telemetry::OperatorCommand>(parsed);
  const std::string name = telemetry::command_name(cmd.body);

  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, telemetry::MoveTag>) {
          if (!source_->is_simulation()) {
            reply("rejected", name, "move_tag requires a simulation source");
          } else if (source_->move_tag(body.tag_id, body.x_m, body.y_m)) {
            reply("ack", name, "ok");
          } else {
            reply("rejected", name, "move_tag failed");
          }
        } else if constexpr (std::is_same_v<T, telemetry::ForceScene>) {
          try {
            const SceneTransition t = pipeline_.force_scene(body.scene_id);
            json payload = log::scene(t);
            payload.erase("kind");
            payload.erase("frame");
            publish(telemetry::Message{telemetry::Kind::Scene, payload, t.frame, wallclock_ms()});
            reply("ack", name, "ok");
          } catch (const Error& e) {
            reply("rejected", name, e.what());
          }
        } else if constexpr (std::is_same_v<T, telemetry::UpdateZone>) {
          try {
            pipeline_.update_zone(body.zone);
            reply("ack", name, "ok");
          } catch (const Error& e) {
            reply("rejected", name, e.what());
          }
        } else if constexpr (std::is_same_v<T, telemetry::Pause>) {
          paused_ = true;
          reply("ack", name, "ok");
        } else if constexpr (std::is_same_v<T, telemetry::Resume>) {
          paused_ = false;
          reply("ack", name, "ok");
        } else if constexpr (std::is_same_v<T, telemetry::RequestCoverage>) {
          try {
            const CoverageGrid grid = coverage_map(pipeline_.config().stage, body.options);
            send_to(pc.client_id, telemetry::from_coverage(grid, frame, wallclock_ms()));
          } catch (const Error& e) {
            reply("rejected", name, e.what());
          }
        }
      },
      cmd.body);
}

void Service::pipeline_loop() {
  const bool paced = options_.speed > 0.0;
  const auto period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(paced ? 1.0 / (options_.fps * options_.speed) : 0.0));
  auto deadline = Clock::now();
  bool exhausted = false;
  bool started = options_.wait_for_clients <= 0;

  while (!stopping_) {
    std::vector<PendingCommand> cmds;
    {
      std::lock_guard lock(cmd_mu_);
      cmds.swap(commands_);
    }
    const FrameIndex frame = pipeline_.last_frame().value_or(0);
    for (const PendingCommand& c : cmds) handle_command(c, frame);

    if (!started) {
      if (connected_ >= options_.wait_for_clients) {
        started = true;
        deadline = Clock::now();
      } else {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        continue;
      }
    }
    if (paused_) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      deadline = Clock::now();
      continue;
    }
    if (exhausted) {
      if (options_.exit_when_done && hub_.all_drained()) {
        {
          std::lock_guard lock(done_mu_);
          done_ = true;
        }
        done_cv_.notify_all();
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
      continue;
    }
    if (paced) {
      const auto now = Clock::now();
      if (now < deadline) {
        std::this_thread::sleep_for(std::min<Clock::duration>(deadline - now, std::chrono::milliseconds(5)));
        continue;
      }
      deadline += period;
    }

    std::optional<SourceFrame> sf;
    try {
      sf = source_->next();
    } catch (const Error& e) {
      publish(telemetry::from_diag(Diagnostic{frame, std::nullopt, "source_error", e.what()}, wallclock_ms()));
    }
    if (!sf) {
      exhausted = true;
      publish(telemetry::from_diag(Diagnostic{frame, std::nullopt, "end_of_source", "source exhausted"}, wallclock_ms()));
      continue;
    }
    const std::int64_t now_ms = wallclock_ms();
    for (const Diagnostic& d : sf->diagnostics) publish(telemetry::from_diag(d, now_ms));
    try {
      const FrameOutput out = pipeline_.process(sf->frame, sf->timestamp_ms, sf->inputs);
      for (const telemetry::Message& m : telemetry::from_frame(out, now_ms)) publish(m);
    } catch (const Error& e) {
      publish(telemetry::from_diag(Diagnostic{sf->frame, std::nullopt, std::string(to_string(e.code())), e.what()}, now_ms));
    }
  }
}

void Service::wait() {
  std::unique_lock lock(done_mu_);
  done_cv_.wait(lock, [this] { return done_.load() || stopping_.load(); });
}

void Service::stop() {
  if (stopping_.exchange(true)) return;
  done_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
  if (acceptor_.joinable()) acceptor_.join();
  hub_.close_all();
  reap_connections(true);
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

}  // namespace stagetrack::service
