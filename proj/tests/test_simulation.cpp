#include <doctest.h>

#include <cmath>
#include <numbers>

#include "lapret/simulation.hpp"

using namespace lapret;
using namespace lapret::sim;

namespace {

constexpr double kPi = std::numbers::pi;

PilotResult estimate_all(const SimulatedData& data, double alpha, double eps,
                         UndetectedPolicy policy = UndetectedPolicy::exclude) {
  std::vector<PairLapret> out;
  for (const auto& p : index_pairs(data)) out.push_back(estimate_pair_lapret(p, {alpha, eps}));
  return aggregate(out, Aggregation::mean, policy);
}

}  // namespace

TEST_CASE("surface: landmarks and pointwise values") {
  CHECK(scenario_one_mu1(3.5) == 0.0);
  const auto s1 = surface(1), s2 = surface(2), s3 = surface(3);
  CHECK(*s1.true_lapret == 3);
  CHECK(s1.true_event == 14);
  CHECK(s1.true_event - *s1.true_lapret == 11);
  CHECK(*s2.true_lapret == 3);
  CHECK(s2.true_event == 9);
  CHECK(*s3.true_lapret == 2);
  CHECK(s3.true_event == 14);
  CHECK(s3.mu1(3) == std::sin(3.5 * kPi / 15 * 0.5));
  CHECK(s3.mu1(3) == doctest::Approx(0.35837).epsilon(1e-5));
  CHECK(s1.mu1(6) == std::sin(2 * kPi / 15 * 2.5));
}

TEST_CASE("surface: mu1 vanishes up to the LaPRET, scenarios 1 and 2 share mu1") {
  for (int k = 1; k <= 3; ++k) {
    const auto s = surface(k);
    for (Day t = kFirstDay; t <= *s.true_lapret; ++t) CHECK(std::abs(s.mu1(t)) <= 1e-12);
    for (Day t = kFirstDay; t <= kLastDay; ++t) CHECK(s.mu0(t) == 0.0);
  }
  for (Day t = kFirstDay; t <= kLastDay; ++t) CHECK(surface(1).mu1(t) == surface(2).mu1(t));
  // Scenario 3 changes sign between the LaPRET and the event.
  bool positive = false, negative = false;
  for (Day t = 3; t < 14; ++t) {
    positive |= scenario_three_mu1(t) > 0;
    negative |= scenario_three_mu1(t) < 0;
  }
  CHECK(positive);
  CHECK(negative);
}

TEST_CASE("surface: unknown scenario") {
  for (int k : {0, 4, -1}) {
    try {
      surface(k);
      FAIL("expected unknown-scenario");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::unknown_scenario);
    }
  }
}

TEST_CASE("generate: zero noise reproduces the surfaces") {
  for (int k = 1; k <= 3; ++k) {
    const auto s = surface(k);
    const auto data = generate({.scenario = k, .sigma = 0.0, .n_units = 20, .seed = 3});
    REQUIRE(data.units.size() == 20);
    for (std::size_t i = 0; i < data.units.size(); ++i) {
      const auto& u = data.units[i];
      CHECK(u.event_indicator == (i < 10));
      CHECK(u.outcomes.first_day == kFirstDay);
      CHECK(u.outcomes.last_day() == kLastDay);
      for (Day t = kFirstDay; t <= kLastDay; ++t) CHECK(u.outcomes[t] == (u.event_indicator ? s.mu1(t) : 0.0));
      if (u.event_indicator) CHECK(*u.event_time == s.true_event);
      CHECK(data.potential[i].true_event_time == s.true_event);
      CHECK(data.potential[i].true_lapret == s.true_lapret);
    }
  }
}

TEST_CASE("generate: contamination f2 shift frequencies") {
  const auto data = generate({.scenario = 2, .sigma = 0.0, .contamination = Contamination::f2, .n_units = 20000, .seed = 44});
  double counts[3] = {0, 0, 0};
  double n = 0;
  for (const auto& u : data.units) {
    if (!u.event_indicator) continue;
    counts[*u.event_time - 9 + 1] += 1;
    n += 1;
  }
  CHECK(n == 10000);
  CHECK(std::abs(counts[0] / n - 0.25) <= 0.02);
  CHECK(std::abs(counts[1] / n - 0.50) <= 0.02);
  CHECK(std::abs(counts[2] / n - 0.25) <= 0.02);
}

TEST_CASE("generate: contamination tables and range") {
  auto close = [](std::array<double, 3> a, std::array<double, 3> b) {
    for (int i = 0; i < 3; ++i) {
      if (std::abs(a[i] - b[i]) > 1e-15) return false;
    }
    return true;
  };
  CHECK(close(shift_probabilities(Contamination::f1), {0, 1, 0}));
  CHECK(close(shift_probabilities(Contamination::f2), {0.25, 0.5, 0.25}));
  CHECK(close(shift_probabilities(Contamination::f3), {0.1, 0.5, 0.4}));
  CHECK(close(shift_probabilities(Contamination::f4), {0.4, 0.5, 0.1}));
  for (auto c : {Contamination::f1, Contamination::f2, Contamination::f3, Contamination::f4}) {
    CHECK(parse_contamination(to_string(c)) == c);
    for (int k = 1; k <= 3; ++k) {
      const auto data = generate({.scenario = k, .sigma = 0.01, .contamination = c, .n_units = 400, .seed = 5});
      for (const auto& u : data.units) {
        if (!u.event_time) continue;
        CHECK(*u.event_time >= kFirstDay);
        CHECK(*u.event_time <= kLastDay);
        CHECK(std::abs(*u.event_time - surface(k).true_event) <= 1);
      }
    }
  }
  CHECK_THROWS_AS(parse_contamination("f5"), Error);
}

TEST_CASE("generate: bitwise reproducible and seed-sensitive") {
  const ScenarioSpec spec{.scenario = 3, .sigma = 0.02, .contamination = Contamination::f3, .n_units = 200, .seed = 99};
  const auto a = generate(spec), b = generate(spec);
  CHECK(a.units == b.units);
  auto other = spec;
  other.seed = 100;
  CHECK_FALSE(generate(other).units == a.units);
}

TEST_CASE("generate: scenario validation") {
  CHECK_THROWS_AS(generate({.scenario = 1, .n_units = 7}), Error);
  CHECK_THROWS_AS(generate({.scenario = 1, .sigma = -1.0}), Error);
  CHECK_THROWS_AS(generate({.scenario = 1, .sigma = INFINITY}), Error);
  CHECK_THROWS_AS(generate({.scenario = 9}), Error);
}

TEST_CASE("zero-noise round trip recovers the true d") {
  const int expected[] = {0, 11, 6, 12};
  for (int k = 1; k <= 3; ++k) {
    const auto r = estimate_all(generate({.scenario = k, .n_units = 600, .seed = 1}), 10, 0.2);
    REQUIRE(r.d_floor);
    CHECK(*r.d_floor == expected[k]);
    CHECK(r.n_detected == 300);
  }
}

TEST_CASE("sweep: default grid shape and row order") {
  const auto result = sweep(2, SweepGrid{}, 2016, 40);
  const SweepGrid grid;
  REQUIRE(grid.alphas.size() == 20);
  CHECK(grid.alphas.front() == 1);
  CHECK(grid.alphas.back() == 96);
  CHECK(result.rows.size() == 4 * 4 * 20 * 6);
  std::size_t i = 0;
  for (double s : grid.sigmas) {
    for (auto c : grid.contaminations) {
      for (double a : grid.alphas) {
        for (double e : grid.epsilons) {
          const auto& row = result.rows[i++];
          CHECK(row.sigma == s);
          CHECK(row.contamination == c);
          CHECK(row.alpha == a);
          CHECK(row.epsilon == e);
          if (row.d_hat) CHECK(*row.d_floor == static_cast<int>(std::floor(*row.d_hat)));
        }
      }
    }
  }
}

TEST_CASE("sweep: noiseless moderate alpha returns d exactly") {
  SweepGrid grid;
  grid.sigmas = {0.0};
  grid.contaminations = {Contamination::f1};
  grid.alphas = {6, 11, 16};
  grid.epsilons = {0.2};
  const double expected[] = {0, 11, 6, 12};
  for (int k = 1; k <= 3; ++k) {
    for (const auto& row : sweep(k, grid, 1).rows) {
      REQUIRE(row.d_hat);
      CHECK(*row.d_hat == expected[k]);
    }
  }
}

TEST_CASE("sweep: schedule-independent and cell-seeded") {
  SweepGrid grid;
  grid.alphas = {6, 46};
  grid.epsilons = {0.2, 0.4};
  const auto a = sweep(1, grid, 5, 60), b = sweep(1, grid, 5, 60);
  CHECK(a.rows == b.rows);

  // One cell run alone equals the same cell inside the full grid.
  SweepGrid single = grid;
  single.sigmas = {grid.sigmas[2]};
  single.contaminations = {Contamination::f3};
  const auto alone = sweep(1, single, 5, 60);
  std::vector<SweepRow> picked;
  for (const auto& row : a.rows) {
    if (row.sigma == grid.sigmas[2] && row.contamination == Contamination::f3) picked.push_back(row);
  }
  CHECK(alone.rows == picked);
  CHECK(cell_seed(5, 1, 0.01, Contamination::f1) != cell_seed(5, 1, 0.01, Contamination::f2));
  CHECK(cell_seed(5, 1, 0.01, Contamination::f1) != cell_seed(5, 2, 0.01, Contamination::f1));
}

TEST_CASE("sweep: count_as_zero and exclude agree when every pair detects") {
  SweepGrid grid;
  grid.sigmas = {0.0};
  grid.contaminations = {Contamination::f1};
  grid.alphas = {11};
  grid.epsilons = {0.2};
  CHECK(sweep(2, grid, 1, 100, UndetectedPolicy::exclude).rows == sweep(2, grid, 1, 100).rows);
}
