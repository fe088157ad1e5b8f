#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lapret/series.hpp"

namespace lapret {

using UnitId = std::string;

/// One unit's observed daily outcomes, covariates and event proxy (D, T^event).
struct UnitSeries {
  UnitId unit_id;
  Series outcomes;
  Eigen::VectorXd covariates;
  bool event_indicator = false;
  std::optional<Day> event_time;

  bool treated() const { return event_indicator; }

  bool operator==(const UnitSeries& o) const {
    return unit_id == o.unit_id && outcomes == o.outcomes && covariates.size() == o.covariates.size() &&
           covariates == o.covariates && event_indicator == o.event_indicator && event_time == o.event_time;
  }
};

/// Checks the per-unit invariants and the shared covariate dimension. Throws
/// on the first violation.
void validate_dataset(std::span<const UnitSeries> units);

/// Imputed treatment status Z for one unit in one replicate.
struct TreatmentAssignment {
  UnitId unit_id;
  bool z = false;
  int replicate_index = 0;

  bool operator==(const TreatmentAssignment&) const = default;
};

struct MatchedPair {
  int pair_id = 0;
  UnitId treated_id;
  UnitId control_id;
  Series delta;   // treated minus control, on the shared day range
  Series ddelta;  // backward difference of delta; starts one day later
  Day event_time = 0;
};

/// Noise-free potential outcome surfaces, available only in simulation.
/// T^treat is never represented; it lies somewhere before `true_lapret`'s
/// successor and is not identifiable from data.
struct PotentialOutcomePair {
  Series control_surface;
  Series treated_surface;
  std::optional<Day> true_lapret;
  Day true_event_time = 0;
};

MatchedPair build_pair(const UnitSeries& treated, const UnitSeries& control, int pair_id);

/// Multiple imputation of Z from D: each replicate flips every D_i
/// independently with probability eta / 2, so a balanced D gives
/// cor(Z, D) = 1 - eta in expectation.
std::vector<TreatmentAssignment> impute_treatment(std::span<const UnitSeries> units, double eta, int replicates,
                                                  std::uint64_t seed);

}  // namespace lapret
