#include <catch2/catch_amalgamated.hpp>

#include "reslogit/design.hpp"
#include "reslogit/rng.hpp"
#include "reslogit/types.hpp"

using namespace reslogit;

namespace {

Dataset tiny_dataset(Eigen::Index n_obs, Eigen::Index n_alts,
                     std::vector<std::string> vars) {
  Dataset d;
  d.n_obs = n_obs;
  d.n_alts = n_alts;
  d.attribute_names = std::move(vars);
  d.attributes = Eigen::MatrixXd::Zero(n_obs, d.n_vars());
  d.choices.assign(static_cast<std::size_t>(n_obs), 0);
  for (Eigen::Index j = 0; j < n_alts; ++j) {
    d.alt_names.push_back("alt" + std::to_string(j));
  }
  return d;
}

std::vector<std::string> synth_names(int k) {
  std::vector<std::string> names;
  for (int i = 0; i < k; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

}  // namespace

TEST_CASE("dataset invariants are enforced") {
  Dataset d = tiny_dataset(3, 2, {"a", "b"});
  CHECK_NOTHROW(d.validate());

  SECTION("one-alternative choice set is rejected") {
    Dataset bad = tiny_dataset(3, 1, {"a"});
    CHECK_THROWS_AS(bad.validate(), Error);
  }
  SECTION("choice index out of range") {
    d.choices[1] = 2;
    CHECK_THROWS_AS(d.validate(), Error);
  }
  SECTION("non-finite attribute") {
    d.attributes(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(d.validate(), Error);
  }
  SECTION("shape mismatch") {
    d.attributes = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(d.validate(), Error);
  }
}

TEST_CASE("utility spec validation") {
  Dataset d = tiny_dataset(3, 3, {"a", "b"});
  UtilitySpec spec;
  spec.variables = {"a"};
  spec.reference_alt = 0;
  CHECK_NOTHROW(spec.validate(d));

  SECTION("unknown variable") {
    spec.variables = {"zz"};
    CHECK_THROWS_AS(spec.validate(d), Error);
  }
  SECTION("reference out of range") {
    spec.reference_alt = 3;
    CHECK_THROWS_AS(spec.validate(d), Error);
  }
}

TEST_CASE("beta layout sizes") {
  // 22 variables with ASCs over 7 alternatives, one reference.
  {
    Dataset d = tiny_dataset(2, 7, synth_names(22));
    UtilitySpec spec;
    spec.variables = d.attribute_names;
    spec.include_asc = true;
    const DesignIndex design = build_design(d, spec);
    CHECK(design.beta_length() == 138);
  }
  // Single ASC in a binary model.
  {
    Dataset d = tiny_dataset(2, 2, {});
    UtilitySpec spec;
    spec.include_asc = true;
    const DesignIndex design = build_design(d, spec);
    CHECK(design.beta_length() == 1);
  }
  // Two variables, three alternatives, no ASC: layout enumerated by hand
  // as (x0,alt1)=0, (x0,alt2)=1, (x1,alt1)=2, (x1,alt2)=3.
  {
    Dataset d = tiny_dataset(2, 3, {"x0", "x1"});
    UtilitySpec spec;
    spec.variables = {"x0", "x1"};
    spec.include_asc = false;
    const DesignIndex design = build_design(d, spec);
    REQUIRE(design.beta_length() == 4);
    CHECK(design.beta_index(0, 1) == 0);
    CHECK(design.beta_index(0, 2) == 1);
    CHECK(design.beta_index(1, 1) == 2);
    CHECK(design.beta_index(1, 2) == 3);
  }
}

TEST_CASE("design index is a bijection") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int j = 2 + static_cast<int>(rng.next_below(6));
    const int k = static_cast<int>(rng.next_below(5));
    const int ref = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(j)));
    const bool asc = rng.next_below(2) == 1;
    if (k == 0 && !asc) continue;

    Dataset d = tiny_dataset(2, j, synth_names(k));
    UtilitySpec spec;
    spec.variables = d.attribute_names;
    spec.reference_alt = ref;
    spec.include_asc = asc;
    const DesignIndex design = build_design(d, spec);

    // index -> slot -> index round-trips as the identity.
    for (Eigen::Index idx = 0; idx < design.beta_length(); ++idx) {
      const auto slot = design.describe(idx);
      const Eigen::Index back = slot.is_asc
                                    ? design.asc_index(slot.alt)
                                    : design.beta_index(slot.var, slot.alt);
      CHECK(back == idx);
    }
    // Reference alternative never maps anywhere.
    CHECK_THROWS_AS(design.alt_slot(ref), Error);
  }
}

TEST_CASE("count_parameters reproduces the reference totals") {
  UtilitySpec spec;
  spec.variables = synth_names(22);
  spec.include_asc = true;
  CHECK(count_parameters(spec, ModelKind::reslogit(16), 7) == 922);
  CHECK(count_parameters(spec, ModelKind::mnl(), 7) == 138);
  CHECK(count_parameters(spec, ModelKind::reslogit(0), 7) == 138);
}

TEST_CASE("reslogit parameter count exceeds mnl by depth * J^2") {
  SplitMix64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const int j = 2 + static_cast<int>(rng.next_below(7));
    const int m = static_cast<int>(rng.next_below(20));
    UtilitySpec spec;
    spec.variables = synth_names(static_cast<int>(rng.next_below(6)));
    spec.include_asc = rng.next_below(2) == 1;
    const auto diff = count_parameters(spec, ModelKind::reslogit(m), j) -
                      count_parameters(spec, ModelKind::mnl(), j);
    CHECK(diff == static_cast<Eigen::Index>(m) * j * j);
  }
}

TEST_CASE("model kind invariants") {
  CHECK_NOTHROW(ModelKind::mnl().validate());
  CHECK_NOTHROW(ModelKind::reslogit(16).validate());
  ModelKind bad{ModelFamily::mnl, 2};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("parameters validate against the design shape") {
  Parameters p;
  p.beta = Eigen::VectorXd::Zero(4);
  p.thetas = {Eigen::MatrixXd::Identity(3, 3)};
  CHECK_NOTHROW(p.validate(4, 3));
  CHECK_THROWS_AS(p.validate(5, 3), Error);
  p.thetas = {Eigen::MatrixXd::Identity(2, 3)};
  CHECK_THROWS_AS(p.validate(4, 3), Error);
}

TEST_CASE("scaler standardizes and reports identity") {
  Dataset d = tiny_dataset(4, 2, {"a", "b"});
  d.attributes << 1, 10,
                  2, 10,
                  3, 10,
                  4, 10;
  const Scaler s = Scaler::fit(d, /*with_center=*/true);
  CHECK(s.center(0) == Catch::Approx(2.5));
  CHECK(s.scale(0) == Catch::Approx(std::sqrt(1.25)));
  // Constant column: centered but left unscaled.
  CHECK(s.center(1) == Catch::Approx(10.0));
  CHECK(s.scale(1) == 1.0);

  const Dataset t = s.transform(d);
  CHECK(t.attributes.col(0).mean() == Catch::Approx(0.0).margin(1e-14));
  CHECK(t.attributes.col(1).isZero(1e-14));

  CHECK(Scaler::identity(2).is_identity());
  CHECK_FALSE(s.is_identity());
}
