#include "stagetrack/ranging.hpp"

#include "stagetrack/error.hpp"

namespace stagetrack {

namespace {
constexpr double kTofClamp = 1e-12;  // s
}

double ss_twr_distance(double round_a, double reply_b) {
  if (round_a < reply_b || reply_b < 0.0) {
    throw Error(ErrorCode::NegativeTof, "round trip shorter than reply delay");
  }
  return kSpeedOfLight * (round_a - reply_b) / 2.0;
}

double ds_twr_distance(const TwrExchange& x) {
  if (x.mode != TwrMode::Double) {
    throw Error(ErrorCode::InvalidConfig, "ds_twr_distance needs a double-sided exchange");
  }
  if (x.round_a < 0.0 || x.reply_b < 0.0 || x.round_b < 0.0 || x.reply_a < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "negative duration");
  }
  const double denom = x.round_a + x.round_b + x.reply_a + x.reply_b;
  if (!(denom > 0.0)) throw Error(ErrorCode::InvalidConfig, "all durations are zero");
  double tof = (x.round_a * x.round_b - x.reply_a * x.reply_b) / denom;
  if (tof < 0.0) {
    if (tof < -kTofClamp) throw Error(ErrorCode::NegativeTof, "double-sided ToF is negative");
    tof = 0.0;
  }
  return kSpeedOfLight * tof;
}

TwrExchange simulate_exchange(double true_distance, const ClockModel& initiator,
                              const ClockModel& responder, double reply_delay, TwrMode mode) {
  if (!(true_distance >= 0.0)) throw Error(ErrorCode::InvalidConfig, "distance must be >= 0");
  if (!(reply_delay > 0.0)) throw Error(ErrorCode::InvalidConfig, "reply delay must be > 0");

  const double tof = true_distance / kSpeedOfLight;
  TwrExchange x;
  x.mode = mode;
  // Clock offsets cancel: every quantity is a difference of two timestamps
  // taken on the same clock.
  x.round_a = initiator.measure(2.0 * tof + reply_delay);
  x.reply_b = responder.measure(reply_delay);
  if (mode == TwrMode::Double) {
    x.reply_a = initiator.measure(reply_delay);
    x.round_b = responder.measure(reply_delay + 2.0 * tof);
  }
  return x;
}

}  // namespace stagetrack
