#pragma once

#include <cstdint>

#include "stagetrack/types.hpp"

namespace stagetrack {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

/// Local oscillator model: offset in seconds, drift in parts per million.
struct ClockModel {
  double offset = 0.0;
  double drift_ppm = 0.0;

  /// Duration `true_seconds` as counted on this clock.
  double measure(double true_seconds) const { return true_seconds * (1.0 + drift_ppm * 1e-6); }
};

enum class TwrMode { Single, Double };

/// Two-way-ranging durations, each measured on the local clock of the device
/// that timestamps them. Single mode only fills round_a and reply_b.
struct TwrExchange {
  double round_a = 0.0;  // initiator: poll TX -> response RX
  double reply_b = 0.0;  // responder: poll RX -> response TX
  double round_b = 0.0;  // responder: response TX -> final RX
  double reply_a = 0.0;  // initiator: response RX -> final TX
  TwrMode mode = TwrMode::Single;
};

struct RangeMeasurement {
  TagId tag_id = 0;
  AnchorId anchor_id = 0;
  double distance = 0.0;  // m
  double sigma = 0.1;     // m, 1-sigma
  std::uint8_t quality = 255;
  std::int64_t timestamp_ms = 0;

  bool operator==(const RangeMeasurement&) const = default;
};

/// c * (round - reply) / 2. Throws Error{NegativeTof} when round < reply.
double ss_twr_distance(double round_a, double reply_b);

/// Asymmetric double-sided TWR:
///   tof = (Ra*Rb - Da*Db) / (Ra + Rb + Da + Db).
/// Negative ToF above -1 ps is round-off and clamps to 0; below that throws
/// Error{NegativeTof}.
double ds_twr_distance(const TwrExchange& x);

/// Noise-free timestamp exchange for a tag `true_distance` away. Throws
/// Error{InvalidConfig} when distance < 0 or reply_delay <= 0.
TwrExchange simulate_exchange(double true_distance, const ClockModel& initiator,
                              const ClockModel& responder, double reply_delay, TwrMode mode);

}  // namespace stagetrack
