#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "lapret/core.hpp"
#include "support.hpp"

using namespace lapret;
using namespace lapret::testing;

namespace {

double sample_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Population correlation of (D, Z) where D ~ Bernoulli(1/2) and Z flips D
// with probability q, from the four cells of the joint table.
double flip_correlation_oracle(double q) {
  std::array<std::array<double, 2>, 2> joint{};  // [d][z]
  for (int d = 0; d < 2; ++d) {
    for (int z = 0; z < 2; ++z) joint[d][z] = 0.5 * (d == z ? 1 - q : q);
  }
  double ed = 0, ez = 0, edz = 0;
  for (int d = 0; d < 2; ++d) {
    for (int z = 0; z < 2; ++z) {
      ed += d * joint[d][z];
      ez += z * joint[d][z];
      edz += d * z * joint[d][z];
    }
  }
  return (edz - ed * ez) / std::sqrt(ed * (1 - ed) * ez * (1 - ez));
}

std::vector<UnitSeries> balanced_units(int n) {
  std::vector<UnitSeries> units;
  for (int i = 0; i < n; ++i) {
    const auto id = "u" + std::to_string(1000 + i);
    if (i % 2 == 0) {
      units.push_back(treated_unit(id, series(1, {0.0, 0.0, 0.0}), 2));
    } else {
      units.push_back(control_unit(id, series(1, {0.0, 0.0, 0.0})));
    }
  }
  return units;
}

}  // namespace

TEST_CASE("build_pair: delta and backward difference on the shared range") {
  const auto t = treated_unit("t", series(1, {2, 4, 5}), 3);
  const auto c = control_unit("c", series(1, {2, 1, 1}));
  const auto pair = build_pair(t, c, 7);
  CHECK(pair.pair_id == 7);
  CHECK(pair.treated_id == "t");
  CHECK(pair.control_id == "c");
  CHECK(pair.event_time == 3);
  CHECK(pair.delta == series(1, {0, 3, 4}));
  CHECK(pair.ddelta == series(2, {3, 1}));
}

TEST_CASE("build_pair: two shared days are too few") {
  const auto t = treated_unit("t", series(1, {2, 4}), 2);
  const auto c = control_unit("c", series(1, {2, 1}));
  try {
    build_pair(t, c, 0);
    FAIL("expected overlap-too-short");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::overlap_too_short);
  }
}

TEST_CASE("build_pair: delta lives on the intersection of the day ranges") {
  const auto t = treated_unit("t", series(2, {1, 2, 3, 4, 5}), 5);
  const auto c = control_unit("c", series(1, {1, 1, 1, 1, 1}));
  const auto pair = build_pair(t, c, 0);
  CHECK(pair.delta.first_day == 2);
  CHECK(pair.delta.last_day() == 5);
  CHECK(pair.ddelta.first_day == 3);
  CHECK(pair.ddelta.size() == pair.delta.size() - 1);

  const auto far = control_unit("f", series(6, {1, 1, 1}));
  CHECK_THROWS_AS(build_pair(t, far, 0), Error);
}

TEST_CASE("build_pair: role checks") {
  const auto t = treated_unit("t", series(1, {1, 2, 3}), 2);
  const auto c = control_unit("c", series(1, {1, 2, 3}));
  for (auto [a, b] : {std::pair{c, c}, std::pair{t, t}, std::pair{c, t}}) {
    try {
      build_pair(a, b, 0);
      FAIL("expected role-mismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::role_mismatch);
    }
  }
}

TEST_CASE("build_pair: identical series give zero delta") {
  const auto t = treated_unit("t", series(1, {3, 1, 4, 1, 5}), 4);
  const auto c = control_unit("c", series(1, {3, 1, 4, 1, 5}));
  const auto pair = build_pair(t, c, 0);
  CHECK(pair.delta.values.isZero(0));
  CHECK(pair.ddelta.values.isZero(0));
}

TEST_CASE("build_pair: noiseless sim-2 surface against a flat control reproduces mu1") {
  std::vector<double> mu, zeros;
  for (int t = 1; t <= 16; ++t) {
    mu.push_back(std::max(0.0, std::sin(2 * std::numbers::pi / 15 * (t - 3.5))));
    zeros.push_back(0.0);
  }
  const auto pair = build_pair(treated_unit("t", series(1, mu), 9), control_unit("c", series(1, zeros)), 0);
  for (int t = 1; t <= 16; ++t) CHECK(pair.delta[t] == mu[static_cast<std::size_t>(t - 1)]);
}

TEST_CASE("build_pair: ddelta telescopes and role swap negates delta") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z(0.0, 3.0);
  std::uniform_int_distribution<int> len(3, 30), start(1, 5);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = len(rng);
    const Day first = start(rng);
    std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (auto& x : a) x = z(rng);
    for (auto& x : b) x = z(rng);
    const auto pair = build_pair(treated_unit("t", series(first, a), first + n - 1), control_unit("c", series(first, b)), 0);

    for (Day lo = pair.delta.first_day; lo < pair.delta.last_day(); ++lo) {
      for (Day hi = lo + 1; hi <= pair.delta.last_day(); ++hi) {
        double sum = 0;
        for (Day s = lo + 1; s <= hi; ++s) sum += pair.ddelta[s];
        CHECK(sum == doctest::Approx(pair.delta[hi] - pair.delta[lo]).epsilon(1e-12));
      }
    }

    const auto swapped = build_pair(treated_unit("c", series(first, b), first + n - 1), control_unit("t", series(first, a)), 0);
    CHECK(swapped.delta.values == -pair.delta.values);
  }
}

TEST_CASE("impute_treatment: eta = 0 is the identity for every seed and replicate") {
  const auto units = balanced_units(40);
  for (std::uint64_t seed : {0ULL, 1ULL, 99ULL, 123456789ULL}) {
    const auto out = impute_treatment(units, 0.0, 3, seed);
    REQUIRE(out.size() == units.size() * 3);
    for (std::size_t k = 0; k < out.size(); ++k) {
      const auto& u = units[k % units.size()];
      CHECK(out[k].unit_id == u.unit_id);
      CHECK(out[k].z == u.event_indicator);
      CHECK(out[k].replicate_index == static_cast<int>(k / units.size()));
    }
  }
}

TEST_CASE("impute_treatment: eta = 0.2 reaches the flip-table correlation") {
  const auto units = balanced_units(200);
  const int replicates = 10000;
  const auto out = impute_treatment(units, 0.2, replicates, 2016);
  std::vector<double> d, z;
  for (const auto& u : units) d.push_back(u.event_indicator ? 1.0 : 0.0);
  double total = 0;
  for (int r = 0; r < replicates; ++r) {
    z.clear();
    for (std::size_t i = 0; i < units.size(); ++i) z.push_back(out[static_cast<std::size_t>(r) * units.size() + i].z ? 1.0 : 0.0);
    total += sample_correlation(d, z);
  }
  const double target = flip_correlation_oracle(0.1);
  CHECK(target == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(std::abs(total / replicates - target) <= 0.02);
}

TEST_CASE("impute_treatment: validation and determinism") {
  const auto units = balanced_units(10);
  for (double eta : {-0.1, 1.0, 1.5, std::nan("")}) {
    try {
      impute_treatment(units, eta, 1, 0);
      FAIL("expected invalid-eta");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_eta);
    }
  }
  CHECK_THROWS_AS(impute_treatment(units, 0.1, 0, 0), Error);
  CHECK(impute_treatment(units, 0.5, 5, 3) == impute_treatment(units, 0.5, 5, 3));
  CHECK(impute_treatment(units, 0.5, 5, 3) != impute_treatment(units, 0.5, 5, 4));
}

TEST_CASE("validate_dataset: invariants") {
  std::vector<UnitSeries> ok{treated_unit("a", series(1, {1, 2, 3}), 2, vec({1})),
                             control_unit("b", series(1, {1, 2, 3}), vec({2}))};
  CHECK_NOTHROW(validate_dataset(ok));

  auto bad_event = ok;
  bad_event[0].event_time = 9;
  CHECK_THROWS_AS(validate_dataset(bad_event), Error);

  auto missing_event = ok;
  missing_event[0].event_time.reset();
  CHECK_THROWS_AS(validate_dataset(missing_event), Error);

  auto dims = ok;
  dims[1].covariates = vec({1, 2});
  try {
    validate_dataset(dims);
    FAIL("expected dimension-mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::dimension_mismatch);
  }
}

TEST_CASE("DaySeries: accessors and backward difference") {
  const auto s = series(3, {1, 4, 9, 16});
  CHECK(s.last_day() == 6);
  CHECK(s.contains(3));
  CHECK_FALSE(s.contains(7));
  CHECK(s.at(5) == 9);
  CHECK_THROWS_AS(s.at(2), Error);
  CHECK(backward_difference(s) == series(4, {3, 5, 7}));
  CHECK(clip(s, 4, 5) == series(4, {4, 9}));
  CHECK(clip(s, 8, 9).empty());
}
