#include <doctest.h>

#include <cmath>

#include "apl/rng.hpp"

using apl::Rng;

TEST_CASE("rng: identical seeds give identical streams") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.raw() == b.raw());
  }
}

TEST_CASE("rng: uniform stays in [0,1) with sane mean") {
  Rng rng(7);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("rng: normal moments") {
  Rng rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("rng: integer bound respected") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    CHECK(rng.integer(7) < 7);
  }
}

TEST_CASE("rng: split streams differ from parent and each other") {
  Rng root(99);
  Rng a = root.split(0);
  Rng b = root.split(1);
  int same_ab = 0;
  for (int i = 0; i < 100; ++i) {
    if (a.raw() == b.raw()) same_ab += 1;
  }
  CHECK(same_ab == 0);
  // Splitting is a function of (seed, tag), not of draws made so far.
  Rng c = root.split(0);
  Rng a2(Rng(99).split(0));
  CHECK(c.raw() == a2.raw());
}
