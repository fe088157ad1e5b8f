#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lapret/core.hpp"
#include "lapret/estimator.hpp"

namespace lapret::sim {

inline constexpr Day kFirstDay = 1;
inline constexpr Day kLastDay = 16;

enum class Contamination { f1, f2, f3, f4 };

std::string_view to_string(Contamination c);
Contamination parse_contamination(std::string_view name);

/// P(c = -1), P(c = 0), P(c = +1).
std::array<double, 3> shift_probabilities(Contamination c);

struct ScenarioSpec {
  int scenario = 1;
  double sigma = 0.0;
  Contamination contamination = Contamination::f1;
  int n_units = 600;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SurfaceDef {
  int scenario = 0;  // 0 denotes the no-effect surface
  std::function<double(double)> mu0;
  std::function<double(double)> mu1;
  std::optional<Day> true_lapret;
  Day true_event = 0;
};

/// Idealized response surfaces for scenarios 1-3.
SurfaceDef surface(int scenario);

/// mu1 == mu0 == 0 with the landmarks of `scenario`; no LaPRET exists.
SurfaceDef null_surface(int scenario);

double scenario_one_mu1(double t);
double scenario_three_mu1(double t);

struct SimulatedData {
  std::vector<PotentialOutcomePair> potential;  // one per unit
  std::vector<UnitSeries> units;                // first half treated, second half control
};

SimulatedData generate(const ScenarioSpec& spec);
SimulatedData generate(const ScenarioSpec& spec, const SurfaceDef& surface);

/// Treated unit j paired with control unit j (no matching).
std::vector<MatchedPair> index_pairs(const SimulatedData& data);

struct SweepGrid {
  std::vector<double> sigmas{0.005, 0.01, 0.015, 0.02};
  std::vector<Contamination> contaminations{Contamination::f1, Contamination::f2, Contamination::f3,
                                            Contamination::f4};
  std::vector<double> alphas = default_alphas();
  std::vector<double> epsilons{0.0001, 0.02, 0.2, 0.3, 0.4, 0.5};

  /// 1, 6, 11, ..., 96.
  static std::vector<double> default_alphas();
};

struct SweepRow {
  double alpha = 0;
  double epsilon = 0;
  double sigma = 0;
  Contamination contamination = Contamination::f1;
  std::optional<double> d_hat;
  std::optional<int> d_floor;
  int n_detected = 0;

  bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

/// Seed of the dataset for one (sigma, contamination) cell.
std::uint64_t cell_seed(std::uint64_t master, int scenario, double sigma, Contamination c);

/// One dataset per (sigma, contamination) cell, shared across the (alpha,
/// epsilon) grid. Cells run concurrently; rows come out in grid order
/// (sigma, contamination, alpha, epsilon).
SweepResult sweep(int scenario, const SweepGrid& grid, std::uint64_t seed, int n_units = 600,
                  UndetectedPolicy undetected = UndetectedPolicy::count_as_zero);

}  // namespace lapret::sim
