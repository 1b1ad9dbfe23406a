#include <catch2/catch_amalgamated.hpp>

#include "reslogit/math.hpp"
#include "reslogit/rng.hpp"

using namespace reslogit;

TEST_CASE("softplus reference values") {
  CHECK(softplus(0.0) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  // The two worked residual entries: softplus(-2) and softplus(1).
  CHECK(softplus(-2.0) == Catch::Approx(0.126928011).epsilon(1e-6));
  CHECK(softplus(1.0) == Catch::Approx(1.313261687).epsilon(1e-6));
}

TEST_CASE("softplus asymptote and extremes") {
  CHECK(softplus(1000.0) == Catch::Approx(1000.0).epsilon(1e-12));
  CHECK(softplus(-745.0) == Catch::Approx(std::exp(-745.0)).epsilon(1e-9));
  CHECK(softplus(-1000.0) >= 0.0);
  CHECK(std::isfinite(softplus(708.0)));
}

TEST_CASE("softplus is monotone nondecreasing") {
  SplitMix64 rng(17);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.next_double(-40.0, 40.0);
    const double b = rng.next_double(-40.0, 40.0);
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    CHECK(softplus(lo) <= softplus(hi));
  }
}

TEST_CASE("softplus rejects non-finite input") {
  CHECK_THROWS_AS(softplus(std::numeric_limits<double>::infinity()), Error);
  CHECK_THROWS_AS(softplus(std::numeric_limits<double>::quiet_NaN()), Error);
}

TEST_CASE("sigmoid agrees with the direct formula") {
  SplitMix64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double z = rng.next_double(-30.0, 30.0);
    CHECK(sigmoid(z) == Catch::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-12));
  }
  CHECK(sigmoid(1000.0) == Catch::Approx(1.0));
  CHECK(sigmoid(-1000.0) >= 0.0);
}

TEST_CASE("softmax sums to one and is shift invariant") {
  SplitMix64 rng(5);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd z(5);
    for (int j = 0; j < 5; ++j) z(j) = rng.next_double(-50.0, 50.0);
    const Eigen::VectorXd p = softmax(z);
    CHECK(p.sum() == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(p.minCoeff() > 0.0);
    const double shift = rng.next_double(-10.0, 10.0);
    const Eigen::VectorXd q = softmax(z.array() + shift);
    CHECK((p - q).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("log_softmax_at matches log of softmax away from underflow") {
  Eigen::VectorXd z(4);
  z << 0.3, -1.2, 2.0, 0.0;
  const Eigen::VectorXd p = softmax(z);
  for (int j = 0; j < 4; ++j) {
    CHECK(log_softmax_at(z, j) == Catch::Approx(std::log(p(j))).epsilon(1e-12));
  }
}

TEST_CASE("splitmix sequence is stable and shuffles deterministically") {
  SplitMix64 a(42);
  SplitMix64 b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> v2 = v1;
  SplitMix64 r1(7);
  SplitMix64 r2(7);
  shuffle(v1, r1);
  shuffle(v2, r2);
  CHECK(v1 == v2);
}
