#include <catch2/catch_amalgamated.hpp>

#include "reslogit/model.hpp"
#include "reslogit/rng.hpp"

using namespace reslogit;

namespace {

Eigen::MatrixXd competing_theta() {
  Eigen::MatrixXd t(3, 3);
  t << 0, -1, -1,
      -1,  0,  1,
      -1,  1,  0;
  return t;
}

Eigen::MatrixXd noncompeting_theta() {
  Eigen::MatrixXd t(3, 3);
  t << 0, 0, 0,
       0, 0, 1,
       0, 1, 0;
  return t;
}

Eigen::MatrixXd random_matrix(int j, SplitMix64& rng, double lo, double hi) {
  Eigen::MatrixXd m(j, j);
  for (int r = 0; r < j; ++r) {
    for (int c = 0; c < j; ++c) m(r, c) = rng.next_double(lo, hi);
  }
  return m;
}

Eigen::VectorXd random_vector(int j, SplitMix64& rng, double lo, double hi) {
  Eigen::VectorXd v(j);
  for (int r = 0; r < j; ++r) v(r) = rng.next_double(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("linear utility layout") {
  Dataset d;  // only the design matters here
  d.n_obs = 1;
  d.n_alts = 3;
  d.attribute_names = {"x"};
  d.attributes = Eigen::MatrixXd::Constant(1, 1, 2.0);
  d.choices = {0};
  d.alt_names = {"a", "b", "c"};

  SECTION("all-zero beta gives zero utilities") {
    UtilitySpec spec;
    spec.variables = {"x"};
    spec.include_asc = true;
    const DesignIndex design = build_design(d, spec);
    Parameters p;
    p.beta = Eigen::VectorXd::Zero(design.beta_length());
    const Eigen::VectorXd v = linear_utility(p, d.attributes.row(0), design);
    CHECK(v.isZero(0.0));
  }
  SECTION("one variable, beta (1,-1) against reference 0, x=2") {
    UtilitySpec spec;
    spec.variables = {"x"};
    spec.include_asc = false;
    const DesignIndex design = build_design(d, spec);
    Parameters p;
    p.beta = Eigen::VectorXd::Zero(2);
    p.beta(design.beta_index(0, 1)) = 1.0;
    p.beta(design.beta_index(0, 2)) = -1.0;
    const Eigen::VectorXd v = linear_utility(p, d.attributes.row(0), design);
    CHECK(v(0) == 0.0);
    CHECK(v(1) == Catch::Approx(2.0));
    CHECK(v(2) == Catch::Approx(-2.0));
  }
  SECTION("ASC only") {
    Dataset b;
    b.n_obs = 1;
    b.n_alts = 2;
    b.attributes = Eigen::MatrixXd::Zero(1, 0);
    b.choices = {0};
    b.alt_names = {"a", "b"};
    UtilitySpec spec;
    spec.include_asc = true;
    const DesignIndex design = build_design(b, spec);
    Parameters p;
    p.beta = Eigen::VectorXd::Constant(1, 0.5);
    const Eigen::VectorXd v = linear_utility(p, b.attributes.row(0), design);
    CHECK(v(0) == 0.0);
    CHECK(v(1) == Catch::Approx(0.5));
  }
}

TEST_CASE("residual forward reproduces the worked scenarios") {
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(3, 1.0);

  SECTION("competing car/bus matrix") {
    std::vector<Eigen::MatrixXd> thetas{competing_theta()};
    const ForwardTrace trace = residual_forward(thetas, v);
    CHECK(trace.residual(0) == Catch::Approx(-0.127).margin(1e-3));
    CHECK(trace.residual(1) == Catch::Approx(-0.693).margin(1e-3));
    CHECK(trace.residual(2) == Catch::Approx(-0.693).margin(1e-3));
  }
  SECTION("non-competing matrix") {
    std::vector<Eigen::MatrixXd> thetas{noncompeting_theta()};
    const ForwardTrace trace = residual_forward(thetas, v);
    CHECK(trace.residual(0) == Catch::Approx(-0.693).margin(1e-3));
    CHECK(trace.residual(1) == Catch::Approx(-1.313).margin(1e-3));
    CHECK(trace.residual(2) == Catch::Approx(-1.313).margin(1e-3));
  }
  SECTION("all-zero matrices give -M ln 2 everywhere") {
    for (int m : {1, 3, 16}) {
      std::vector<Eigen::MatrixXd> thetas(
          static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(3, 3));
      const ForwardTrace trace = residual_forward(thetas, v);
      for (int jx = 0; jx < 3; ++jx) {
        CHECK(trace.residual(jx) ==
              Catch::Approx(-m * std::log(2.0)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("forward trace invariants") {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int j = 2 + static_cast<int>(rng.next_below(6));
    const int m = static_cast<int>(rng.next_below(5));
    std::vector<Eigen::MatrixXd> thetas;
    for (int i = 0; i < m; ++i) {
      thetas.push_back(random_matrix(j, rng, -2.0, 2.0));
    }
    const Eigen::VectorXd v = random_vector(j, rng, -4.0, 4.0);
    const ForwardTrace trace = residual_forward(thetas, v);

    REQUIRE(trace.hidden.size() == static_cast<std::size_t>(m) + 1);
    CHECK(trace.hidden[0] == v);
    CHECK((trace.residual - (trace.hidden.back() - v)).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK(trace.probs.sum() == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(trace.probs.minCoeff() > 0.0);
    // The residual correction is never positive.
    CHECK(trace.residual.maxCoeff() <= 0.0);
    CHECK(((trace.hidden.back() - v).array() <= 0.0).all());
  }
}

TEST_CASE("residual forward rejects bad input") {
  std::vector<Eigen::MatrixXd> thetas{Eigen::MatrixXd::Zero(2, 3)};
  CHECK_THROWS_AS(residual_forward(thetas, Eigen::VectorXd::Zero(3)), Error);
  Eigen::VectorXd bad(2);
  bad << 1.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(residual_forward({}, bad), Error);
}

TEST_CASE("choice probabilities against the reference table") {
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(3, 1.0);
  {
    Eigen::Vector3d g(-0.126928011, -0.6931471806, -0.6931471806);
    const Eigen::VectorXd p = choice_probabilities(v, g);
    CHECK(p(0) == Catch::Approx(0.468).margin(1e-3));
    CHECK(p(1) == Catch::Approx(0.265).margin(1e-3));
    CHECK(p(2) == Catch::Approx(0.265).margin(1e-3));
  }
  {
    Eigen::Vector3d g(-0.6931471806, -1.3132616875, -1.3132616875);
    const Eigen::VectorXd p = choice_probabilities(v, g);
    CHECK(p(0) == Catch::Approx(0.482).margin(1e-3));
    CHECK(p(1) == Catch::Approx(0.259).margin(1e-3));
    CHECK(p(2) == Catch::Approx(0.259).margin(1e-3));
  }
  {
    const Eigen::VectorXd p =
        choice_probabilities(v, Eigen::VectorXd::Zero(3));
    for (int jx = 0; jx < 3; ++jx) {
      CHECK(p(jx) == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("zero-theta stacks collapse to the plain softmax") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int j = 2 + static_cast<int>(rng.next_below(5));
    const Eigen::VectorXd v = random_vector(j, rng, -8.0, 8.0);
    const Eigen::VectorXd base = softmax(v);
    for (int m : {1, 4, 16}) {
      std::vector<Eigen::MatrixXd> thetas(
          static_cast<std::size_t>(m), Eigen::MatrixXd::Zero(j, j));
      const ForwardTrace trace = residual_forward(thetas, v);
      CHECK((trace.probs - base).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("diagonal residual matrices keep the correction local") {
  SplitMix64 rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const int j = 3 + static_cast<int>(rng.next_below(3));
    const int m = 1 + static_cast<int>(rng.next_below(3));
    std::vector<Eigen::MatrixXd> thetas;
    for (int i = 0; i < m; ++i) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(j, j);
      for (int a = 0; a < j; ++a) t(a, a) = rng.next_double(-2.0, 2.0);
      thetas.push_back(std::move(t));
    }
    Eigen::VectorXd v = random_vector(j, rng, -3.0, 3.0);
    const ForwardTrace before = residual_forward(thetas, v);
    const int perturbed = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(j)));
    v(perturbed) += rng.next_double(0.1, 2.0);
    const ForwardTrace after = residual_forward(thetas, v);
    for (int a = 0; a < j; ++a) {
      if (a == perturbed) continue;
      CHECK(after.residual(a) == Catch::Approx(before.residual(a)).epsilon(1e-14));
    }
  }
}

TEST_CASE("probabilities are invariant to uniform shifts of V and g") {
  SplitMix64 rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    const int j = 2 + static_cast<int>(rng.next_below(5));
    const Eigen::VectorXd v = random_vector(j, rng, -5.0, 5.0);
    const Eigen::VectorXd g = random_vector(j, rng, -5.0, 0.0);
    const double c = rng.next_double(-20.0, 20.0);
    const double d = rng.next_double(-20.0, 20.0);
    const Eigen::VectorXd p = choice_probabilities(v, g);
    const Eigen::VectorXd q =
        choice_probabilities(v.array() + c, g.array() + d);
    CHECK((p - q).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("q-form equals the direct probabilities") {
  SECTION("red/blue competing scenario") {
    std::vector<Eigen::MatrixXd> thetas{competing_theta()};
    const Eigen::VectorXd v = Eigen::VectorXd::Constant(3, 1.0);
    const ForwardTrace trace = residual_forward(thetas, v);
    const Eigen::VectorXd q = q_form_probabilities(v, thetas, trace);
    CHECK(q(0) == Catch::Approx(0.468).margin(1e-3));
    CHECK(q(1) == Catch::Approx(0.265).margin(1e-3));
    CHECK((q - trace.probs).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("zero matrices reduce to softmax of V") {
    SplitMix64 rng(53);
    const Eigen::VectorXd v = random_vector(4, rng, -3.0, 3.0);
    std::vector<Eigen::MatrixXd> thetas(3, Eigen::MatrixXd::Zero(4, 4));
    const ForwardTrace trace = residual_forward(thetas, v);
    const Eigen::VectorXd q = q_form_probabilities(v, thetas, trace);
    CHECK((q - softmax(v)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("random instances, J=5, M=3") {
    SplitMix64 rng(59);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Eigen::MatrixXd> thetas;
      for (int m = 0; m < 3; ++m) thetas.push_back(random_matrix(5, rng, -2, 2));
      const Eigen::VectorXd v = random_vector(5, rng, -3.0, 3.0);
      const ForwardTrace trace = residual_forward(thetas, v);
      const Eigen::VectorXd q = q_form_probabilities(v, thetas, trace);
      CHECK((q - trace.probs).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("mlp forward") {
  SECTION("zero weights force uniform probabilities") {
    MlpParams p;
    p.weights = {Eigen::MatrixXd::Zero(3, 3)};
    const Eigen::VectorXd probs =
        mlp_forward(p, Eigen::Vector3d(0.4, -2.0, 1.7));
    for (int j = 0; j < 3; ++j) {
      CHECK(probs(j) == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
    }
  }
  SECTION("no layers degenerates to softmax of V") {
    MlpParams p;
    const Eigen::VectorXd v = Eigen::Vector2d(0.3, -0.4);
    CHECK((mlp_forward(p, v) - softmax(v)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("identity weights on zero input") {
    MlpParams p;
    p.weights = {Eigen::MatrixXd::Identity(2, 2)};
    const Eigen::VectorXd probs = mlp_forward(p, Eigen::Vector2d(0.0, 0.0));
    CHECK(probs(0) == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(probs(1) == Catch::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("log likelihood") {
  Dataset d;
  d.n_obs = 1;
  d.n_alts = 4;
  d.attributes = Eigen::MatrixXd::Zero(1, 0);
  d.choices = {2};
  d.alt_names = {"a", "b", "c", "d"};
  UtilitySpec spec;
  spec.include_asc = true;
  const DesignIndex design = build_design(d, spec);
  Parameters p;
  p.beta = Eigen::VectorXd::Zero(design.beta_length());

  SECTION("uniform model over four alternatives") {
    CHECK(log_likelihood(p, d, design, ModelKind::mnl()) ==
          Catch::Approx(std::log(0.25)).epsilon(1e-12));
  }
  SECTION("additivity over identical observations") {
    Dataset two = d;
    two.n_obs = 2;
    two.attributes = Eigen::MatrixXd::Zero(2, 0);
    two.choices = {2, 2};
    const double one = log_likelihood(p, d, design, ModelKind::mnl());
    CHECK(log_likelihood(p, two, design, ModelKind::mnl()) ==
          Catch::Approx(2.0 * one).epsilon(1e-14));
  }
}

TEST_CASE("log probability of the competing scenario car chooser") {
  // One observation choosing car under the worked 1-layer correction:
  // the log of the published probability.
  std::vector<Eigen::MatrixXd> thetas{competing_theta()};
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(3, 1.0);
  const ForwardTrace trace = residual_forward(thetas, v);
  const double ll = log_softmax_at(trace.hidden.back(), 0);
  CHECK(ll == Catch::Approx(std::log(trace.probs(0))).epsilon(1e-12));
  CHECK(ll == Catch::Approx(-0.759).margin(1e-3));
}
