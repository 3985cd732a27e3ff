#include "stagetrack/wire.hpp"

#include <cstring>
#include <type_traits>

#include "stagetrack/error.hpp"

namespace stagetrack::wire {
namespace {

constexpr std::size_t kHeaderBody = 1 + 2 + 1 + 4;  // TYPE, TAG_ID, SEQ, TIMESTAMP

constexpr std::array<std::uint16_t, 256> make_crc_table() {
  std::array<std::uint16_t, 256> table{};
  for (unsigned i = 0; i < 256; ++i) {
    std::uint16_t crc = static_cast<std::uint16_t>(i << 8);
    for (int b = 0; b < 8; ++b) {
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
    }
    table[i] = crc;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  template <typename T>
  void put(T v) {
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::uint8_t>(u & 0xFF));
      if constexpr (sizeof(T) > 1) u = static_cast<U>(u >> 8);
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename T>
  T get() {
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u = static_cast<U>(u | (static_cast<U>(in_[pos_ + i]) << (8 * i)));
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

template <typename F>
void put_header(Writer& w, FrameType type, const F& f) {
  w.put(static_cast<std::uint8_t>(type));
  w.put(f.tag_id);
  w.put(f.seq);
  w.put(f.timestamp_ms);
}

template <typename F>
void get_header(Reader& r, F& f) {
  f.tag_id = r.get<std::uint16_t>();
  f.seq = r.get<std::uint8_t>();
  f.timestamp_ms = r.get<std::uint32_t>();
}

void check_coordinate(std::int32_t v, const char* axis) {
  if (v <= -kMaxCoordinateMm || v >= kMaxCoordinateMm) {
    throw Error(ErrorCode::FieldRange, std::string(axis) + "_mm out of range: " + std::to_string(v));
  }
}

// body = TYPE .. payload end
Frame decode_body(FrameType type, std::span<const std::uint8_t> body) {
  Reader r(body.subspan(1));
  switch (type) {
    case FrameType::Position: {
      PositionReport f;
      get_header(r, f);
      f.x_mm = r.get<std::int32_t>();
      f.y_mm = r.get<std::int32_t>();
      f.z_mm = r.get<std::int32_t>();
      f.err_mm = r.get<std::uint16_t>();
      return f;
    }
    case FrameType::Range: {
      RangeReport f;
      get_header(r, f);
      f.anchor_id = r.get<std::uint16_t>();
      f.range_mm = r.get<std::uint32_t>();
      f.quality = r.get<std::uint8_t>();
      return f;
    }
    case FrameType::Imu: {
      ImuReport f;
      get_header(r, f);
      for (auto& v : f.accel_mg) v = r.get<std::int16_t>();
      for (auto& v : f.gyro_cdps) v = r.get<std::int16_t>();
      for (auto& v : f.mag_dut) v = r.get<std::int16_t>();
      return f;
    }
    case FrameType::Status: {
      Status f;
      get_header(r, f);
      f.battery_pct = r.get<std::uint8_t>();
      f.flags = r.get<std::uint8_t>();
      return f;
    }
  }
  throw Error(ErrorCode::FieldRange, "unknown frame type");
}

}  // namespace

FrameType frame_type(const Frame& f) {
  switch (f.index()) {
    case 0: return FrameType::Position;
    case 1: return FrameType::Range;
    case 2: return FrameType::Imu;
    default: return FrameType::Status;
  }
}

std::uint16_t frame_tag(const Frame& f) {
  return std::visit([](const auto& v) { return v.tag_id; }, f);
}

std::uint32_t frame_timestamp(const Frame& f) {
  return std::visit([](const auto& v) { return v.timestamp_ms; }, f);
}

std::size_t body_length(FrameType type) {
  switch (type) {
    case FrameType::Position: return kHeaderBody + 3 * 4 + 2;
    case FrameType::Range: return kHeaderBody + 2 + 4 + 1;
    case FrameType::Imu: return kHeaderBody + 9 * 2;
    case FrameType::Status: return kHeaderBody + 1 + 1;
  }
  return 0;
}

std::optional<FrameType> frame_type_from_byte(std::uint8_t b) {
  if (b >= 0x01 && b <= 0x04) return static_cast<FrameType>(b);
  return std::nullopt;
}

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t byte : data) {
    crc = static_cast<std::uint16_t>((crc << 8) ^ kCrcTable[((crc >> 8) ^ byte) & 0xFF]);
  }
  return crc;
}

void append_frame(std::vector<std::uint8_t>& out, const Frame& f) {
  const FrameType type = frame_type(f);
  const std::size_t start = out.size();
  Writer w(out);
  w.put(kSof);
  w.put(static_cast<std::uint8_t>(body_length(type)));
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PositionReport>) {
          check_coordinate(v.x_mm, "x");
          check_coordinate(v.y_mm, "y");
          check_coordinate(v.z_mm, "z");
          put_header(w, type, v);
          w.put(v.x_mm);
          w.put(v.y_mm);
          w.put(v.z_mm);
          w.put(v.err_mm);
        } else if constexpr (std::is_same_v<T, RangeReport>) {
          put_header(w, type, v);
          w.put(v.anchor_id);
          w.put(v.range_mm);
          w.put(v.quality);
        } else if constexpr (std::is_same_v<T, ImuReport>) {
          put_header(w, type, v);
          for (auto x : v.accel_mg) w.put(x);
          for (auto x : v.gyro_cdps) w.put(x);
          for (auto x : v.mag_dut) w.put(x);
        } else {
          put_header(w, type, v);
          w.put(v.battery_pct);
          w.put(v.flags);
        }
      },
      f);
  const std::uint16_t crc =
      crc16_ccitt_false(std::span<const std::uint8_t>(out).subspan(start, out.size() - start));
  w.put(crc);
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
  std::vector<std::uint8_t> out;
  out.reserve(encoded_size(frame_type(f)));
  append_frame(out, f);
  return out;
}

DecodeResult decode_stream(std::span<const std::uint8_t> buffer, DecodeDiagnostics& diag,
                           bool end_of_stream) {
  DecodeResult res;
  std::size_t pos = 0;
  const std::size_t n = buffer.size();

  auto reject = [&] {
    ++diag.resyncs;
    ++diag.bytes_skipped;
    ++pos;
  };

  while (pos < n) {
    if (buffer[pos] != kSof) {
      ++diag.bytes_skipped;
      ++pos;
      continue;
    }
    if (pos + 1 >= n) {  // need LEN
      if (!end_of_stream) break;
      reject();
      continue;
    }
    const std::uint8_t len = buffer[pos + 1];
    bool len_known = false;
    for (std::uint8_t t = 0x01; t <= 0x04; ++t) {
      if (len == body_length(static_cast<FrameType>(t))) len_known = true;
    }
    if (!len_known) {
      reject();
      continue;
    }
    if (pos + 2 >= n) {  // need TYPE
      if (!end_of_stream) break;
      reject();
      continue;
    }
    const auto type = frame_type_from_byte(buffer[pos + 2]);
    if (!type || body_length(*type) != len) {
      reject();
      continue;
    }
    const std::size_t total = encoded_size(*type);
    if (pos + total > n) {  // partial frame, wait for more bytes
      if (!end_of_stream) break;
      reject();
      continue;
    }

    const auto covered = buffer.subspan(pos, 2 + len);
    const std::uint16_t expect = crc16_ccitt_false(covered);
    const std::uint16_t got = static_cast<std::uint16_t>(buffer[pos + 2 + len] |
                                                         (buffer[pos + 3 + len] << 8));
    if (expect != got) {
      ++diag.crc_failures;
      reject();
      continue;
    }
    res.frames.push_back(decode_body(*type, buffer.subspan(pos + 2, len)));
    ++diag.frames_ok;
    pos += total;
  }
  res.consumed = pos;
  return res;
}

std::vector<Frame> StreamDecoder::feed(std::span<const std::uint8_t> bytes) {
  pending_.insert(pending_.end(), bytes.begin(), bytes.end());
  DecodeResult res = decode_stream(pending_, diag_);
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(res.consumed));
  return std::move(res.frames);
}

std::vector<Frame> StreamDecoder::finish() {
  DecodeResult res = decode_stream(pending_, diag_, true);
  pending_.clear();
  return std::move(res.frames);
}

}  // namespace stagetrack::wire
