#include <doctest.h>

#include <cmath>

#include "stagetrack/rng.hpp"

using namespace stagetrack;

TEST_CASE("reference outputs") {
  Rng r(42);
  CHECK(r.next() == 0x15780b2e0c2ec716ull);
  CHECK(r.next() == 0x6104d9866d113a7eull);
  CHECK(r.next() == 0xae17533239e499a1ull);
  Rng z(0);
  CHECK(z.next() == 0x99ec5f36cb75f2b4ull);
  CHECK(z.next() == 0xbf6e1f784956452aull);
  Rng u(42);
  CHECK(u.uniform() == 0.08386297105988216);
}

TEST_CASE("same seed, same stream") {
  Rng a(7), b(7), c(8);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next();
    CHECK(x == b.next());
    differs = differs || x != c.next();
  }
  CHECK(differs);
}

TEST_CASE("distribution moments") {
  Rng r(2025);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, se = 0;
  double umin = 1, umax = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    su += u;
    const double x = r.normal();
    sn += x;
    sn2 += x * x;
    const double e = r.exponential(0.4);
    CHECK(e >= 0.0);
    se += e;
  }
  CHECK(umin >= 0.0);
  CHECK(umax < 1.0);
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(se / n == doctest::Approx(0.4).epsilon(0.01));
  CHECK(r.normal(3.0, 0.0) == 3.0);
}
