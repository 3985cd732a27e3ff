#pragma once

// Main-tag serial link codec.
//
// Frame layout, multi-byte fields little-endian:
//
//   SOF 0xA5 | LEN u8 | TYPE u8 | TAG_ID u16 | SEQ u8 | TIMESTAMP_MS u32 | payload | CRC u16
//
// LEN counts TYPE through the end of the payload. CRC is CRC-16/CCITT-FALSE
// (poly 0x1021, init 0xFFFF, no reflection, no final xor) over SOF through
// the end of the payload.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace stagetrack::wire {

inline constexpr std::uint8_t kSof = 0xA5;

enum class FrameType : std::uint8_t { Position = 0x01, Range = 0x02, Imu = 0x03, Status = 0x04 };

inline constexpr std::int32_t kMaxCoordinateMm = 100'000;  // exclusive

struct PositionReport {
  std::uint16_t tag_id = 0;
  std::uint8_t seq = 0;
  std::uint32_t timestamp_ms = 0;
  std::int32_t x_mm = 0;
  std::int32_t y_mm = 0;
  std::int32_t z_mm = 0;
  std::uint16_t err_mm = 0;

  bool operator==(const PositionReport&) const = default;
};

struct RangeReport {
  std::uint16_t tag_id = 0;
  std::uint8_t seq = 0;
  std::uint32_t timestamp_ms = 0;
  std::uint16_t anchor_id = 0;
  std::uint32_t range_mm = 0;
  std::uint8_t quality = 0;

  bool operator==(const RangeReport&) const = default;
};

struct ImuReport {
  std::uint16_t tag_id = 0;
  std::uint8_t seq = 0;
  std::uint32_t timestamp_ms = 0;
  std::array<std::int16_t, 3> accel_mg{};
  std::array<std::int16_t, 3> gyro_cdps{};  // 0.01 deg/s
  std::array<std::int16_t, 3> mag_dut{};    // 0.1 uT

  bool operator==(const ImuReport&) const = default;
};

struct Status {
  std::uint16_t tag_id = 0;
  std::uint8_t seq = 0;
  std::uint32_t timestamp_ms = 0;
  std::uint8_t battery_pct = 0;
  std::uint8_t flags = 0;

  bool operator==(const Status&) const = default;
};

using Frame = std::variant<PositionReport, RangeReport, ImuReport, Status>;

FrameType frame_type(const Frame& f);
std::uint16_t frame_tag(const Frame& f);
std::uint32_t frame_timestamp(const Frame& f);

/// Bytes from TYPE through payload end for a frame type (the LEN value).
std::size_t body_length(FrameType type);
std::optional<FrameType> frame_type_from_byte(std::uint8_t b);

/// Total encoded size: SOF + LEN + body + CRC.
inline std::size_t encoded_size(FrameType type) { return body_length(type) + 4; }

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data);

/// Throws Error{FieldRange} when a PositionReport coordinate is outside
/// (-100000, 100000) mm.
std::vector<std::uint8_t> encode_frame(const Frame& f);
void append_frame(std::vector<std::uint8_t>& out, const Frame& f);

struct DecodeDiagnostics {
  std::uint64_t frames_ok = 0;
  std::uint64_t crc_failures = 0;
  std::uint64_t resyncs = 0;
  std::uint64_t bytes_skipped = 0;

  bool operator==(const DecodeDiagnostics&) const = default;
};

struct DecodeResult {
  std::vector<Frame> frames;
  std::size_t consumed = 0;  // bytes that never need to be re-presented
};

/// Decodes every complete valid frame in `buffer`. Any rejected candidate
/// (bad LEN/TYPE pairing or CRC) drops exactly one byte and rescans. A
/// trailing partial frame is left unconsumed, unless `end_of_stream` is set,
/// in which case an incomplete candidate is rejected like any other and the
/// scan continues to the end of the buffer.
DecodeResult decode_stream(std::span<const std::uint8_t> buffer, DecodeDiagnostics& diag,
                           bool end_of_stream = false);

/// Incremental decoder: keeps the unconsumed tail between feeds.
class StreamDecoder {
 public:
  std::vector<Frame> feed(std::span<const std::uint8_t> bytes);
  /// Drains the pending tail at end of stream.
  std::vector<Frame> finish();

  const DecodeDiagnostics& diagnostics() const { return diag_; }
  std::size_t pending() const { return pending_.size(); }

 private:
  std::vector<std::uint8_t> pending_;
  DecodeDiagnostics diag_;
};

}  // namespace stagetrack::wire
