#include "lapret/simulation.hpp"

#include <bit>
#include <cmath>
#include <future>
#include <numbers>

#include "lapret/rng.hpp"

namespace lapret::sim {

std::string_view to_string(Contamination c) {
  switch (c) {
    case Contamination::f1: return "f1";
    case Contamination::f2: return "f2";
    case Contamination::f3: return "f3";
    case Contamination::f4: return "f4";
  }
  return "?";
}

Contamination parse_contamination(std::string_view name) {
  if (name == "f1") return Contamination::f1;
  if (name == "f2") return Contamination::f2;
  if (name == "f3") return Contamination::f3;
  if (name == "f4") return Contamination::f4;
  throw Error(ErrorCode::invalid_argument, "unknown contamination model '" + std::string(name) + "'");
}

std::array<double, 3> shift_probabilities(Contamination c) {
  switch (c) {
    case Contamination::f1: return {0.0, 1.0, 0.0};
    case Contamination::f2: return {0.25, 0.5, 0.25};
    case Contamination::f3: return {0.1, 0.5, 0.4};
    case Contamination::f4: return {0.4, 0.5, 0.1};
  }
  return {0.0, 1.0, 0.0};
}

void ScenarioSpec::validate() const {
  if (scenario < 1 || scenario > 3) throw Error(ErrorCode::unknown_scenario, "scenario must be 1, 2 or 3");
  if (!(std::isfinite(sigma) && sigma >= 0)) throw Error(ErrorCode::invalid_argument, "sigma must be finite and >= 0");
  if (n_units < 2 || n_units % 2 != 0) throw Error(ErrorCode::invalid_argument, "n_units must be even and >= 2");
}

double scenario_one_mu1(double t) { return std::max(0.0, std::sin(2 * std::numbers::pi / 15 * (t - 3.5))); }

double scenario_three_mu1(double t) {
  const double wave = std::sin(3.5 * std::numbers::pi / 15 * (t - 2.5));
  if ((wave <= 0 && t < 4) || (wave >= 0 && t > 10)) return 0.0;
  return wave;
}

SurfaceDef surface(int scenario) {
  auto zero = [](double) { return 0.0; };
  switch (scenario) {
    case 1: return {1, zero, scenario_one_mu1, 3, 14};
    case 2: return {2, zero, scenario_one_mu1, 3, 9};
    case 3: return {3, zero, scenario_three_mu1, 2, 14};
    default: throw Error(ErrorCode::unknown_scenario, "scenario must be 1, 2 or 3");
  }
}

SurfaceDef null_surface(int scenario) {
  auto s = surface(scenario);
  s.scenario = 0;
  s.mu1 = s.mu0;
  s.true_lapret.reset();
  return s;
}

SimulatedData generate(const ScenarioSpec& spec) { return generate(spec, surface(spec.scenario)); }

SimulatedData generate(const ScenarioSpec& spec, const SurfaceDef& def) {
  spec.validate();
  const Eigen::Index days = kLastDay - kFirstDay + 1;
  Eigen::VectorXd mean0(days), mean1(days);
  for (Eigen::Index k = 0; k < days; ++k) {
    const double t = static_cast<double>(kFirstDay + k);
    mean0[k] = def.mu0(t);
    mean1[k] = def.mu1(t);
  }

  const auto [p_minus, p_zero, p_plus] = shift_probabilities(spec.contamination);
  Rng rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto draw = [&](const Eigen::VectorXd& mean) {
    Eigen::VectorXd y(days);
    for (Eigen::Index k = 0; k < days; ++k) y[k] = mean[k] + spec.sigma * noise(rng);
    return y;
  };

  SimulatedData data;
  const int half = spec.n_units / 2;
  data.potential.reserve(static_cast<std::size_t>(spec.n_units));
  data.units.reserve(static_cast<std::size_t>(spec.n_units));
  for (int i = 0; i < spec.n_units; ++i) {
    PotentialOutcomePair po;
    po.control_surface = Series(kFirstDay, draw(mean0));
    po.treated_surface = Series(kFirstDay, draw(mean1));
    po.true_lapret = def.true_lapret;
    po.true_event_time = def.true_event;

    UnitSeries unit;
    char id[16];
    std::snprintf(id, sizeof id, "sim%05d", i);
    unit.unit_id = id;
    unit.event_indicator = i < half;
    unit.outcomes = unit.event_indicator ? po.treated_surface : po.control_surface;
    unit.covariates = Eigen::VectorXd(0);
    if (unit.event_indicator) {
      const double u = uniform01(rng);
      const int shift = u < p_minus ? -1 : (u < p_minus + p_zero ? 0 : 1);
      const Day event = def.true_event + shift;
      if (event < kFirstDay || event > kLastDay) {
        throw Error(ErrorCode::invalid_argument, "contaminated event day leaves the simulated range");
      }
      unit.event_time = event;
    }
    data.potential.push_back(std::move(po));
    data.units.push_back(std::move(unit));
  }
  return data;
}

std::vector<MatchedPair> index_pairs(const SimulatedData& data) {
  const std::size_t half = data.units.size() / 2;
  std::vector<MatchedPair> pairs;
  pairs.reserve(half);
  for (std::size_t j = 0; j < half; ++j) {
    pairs.push_back(build_pair(data.units[j], data.units[half + j], static_cast<int>(j)));
  }
  return pairs;
}

std::vector<double> SweepGrid::default_alphas() {
  std::vector<double> out;
  for (int a = 1; a <= 96; a += 5) out.push_back(a);
  return out;
}

std::uint64_t cell_seed(std::uint64_t master, int scenario, double sigma, Contamination c) {
  return derive_seed(master,
                     {static_cast<std::uint64_t>(scenario), std::bit_cast<std::uint64_t>(sigma),
                      static_cast<std::uint64_t>(c)},
                     "sweep-cell");
}

SweepResult sweep(int scenario, const SweepGrid& grid, std::uint64_t seed, int n_units, UndetectedPolicy undetected) {
  if (grid.sigmas.empty() || grid.contaminations.empty() || grid.alphas.empty() || grid.epsilons.empty()) {
    throw Error(ErrorCode::invalid_argument, "sweep grids must be nonempty");
  }
  std::vector<std::future<std::vector<SweepRow>>> cells;
  for (double sigma : grid.sigmas) {
    for (Contamination c : grid.contaminations) {
      cells.push_back(std::async(std::launch::async, [=, &grid] {
        const ScenarioSpec spec{scenario, sigma, c, n_units, cell_seed(seed, scenario, sigma, c)};
        const auto pairs = index_pairs(generate(spec));
        std::vector<SweepRow> rows;
        std::vector<PairLapret> estimates(pairs.size());
        for (double alpha : grid.alphas) {
          for (double epsilon : grid.epsilons) {
            const LapretParams params{alpha, epsilon};
            for (std::size_t p = 0; p < pairs.size(); ++p) estimates[p] = estimate_pair_lapret(pairs[p], params);
            const auto pilot = aggregate(estimates, Aggregation::mean, undetected);
            rows.push_back({alpha, epsilon, sigma, c, pilot.d_hat, pilot.d_floor, pilot.n_detected});
          }
        }
        return rows;
      }));
    }
  }
  SweepResult result;
  for (auto& cell : cells) {
    auto rows = cell.get();
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  return result;
}

}  // namespace lapret::sim
