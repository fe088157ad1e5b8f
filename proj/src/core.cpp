#include "lapret/core.hpp"

#include <cmath>

#include "lapret/rng.hpp"

namespace lapret {

void validate_dataset(std::span<const UnitSeries> units) {
  std::optional<Eigen::Index> dimension;
  for (const auto& u : units) {
    if (u.outcomes.empty()) throw Error(ErrorCode::schema_error, "unit " + u.unit_id + " has no outcomes");
    if (u.event_indicator != u.event_time.has_value()) {
      throw Error(ErrorCode::schema_error, "unit " + u.unit_id + ": event_time must be present iff event_indicator = 1");
    }
    if (u.event_time && !u.outcomes.contains(*u.event_time)) {
      throw Error(ErrorCode::schema_error, "unit " + u.unit_id + ": event_time outside the outcome range");
    }
    if (!u.outcomes.values.allFinite() || !u.covariates.allFinite()) {
      throw Error(ErrorCode::schema_error, "unit " + u.unit_id + " has non-finite values");
    }
    if (dimension && *dimension != u.covariates.size()) {
      throw Error(ErrorCode::dimension_mismatch, "unit " + u.unit_id + " has a different covariate dimension");
    }
    dimension = u.covariates.size();
  }
}

MatchedPair build_pair(const UnitSeries& treated, const UnitSeries& control, int pair_id) {
  if (!treated.event_indicator || !treated.event_time) {
    throw Error(ErrorCode::role_mismatch, "unit " + treated.unit_id + " is not a treated unit with an event time");
  }
  if (control.event_indicator) throw Error(ErrorCode::role_mismatch, "unit " + control.unit_id + " is not a control");

  const Day first = std::max(treated.outcomes.first_day, control.outcomes.first_day);
  const Day last = std::min(treated.outcomes.last_day(), control.outcomes.last_day());
  if (last - first + 1 < 3) {
    throw Error(ErrorCode::overlap_too_short,
                "units " + treated.unit_id + " and " + control.unit_id + " share fewer than 3 days");
  }

  MatchedPair pair;
  pair.pair_id = pair_id;
  pair.treated_id = treated.unit_id;
  pair.control_id = control.unit_id;
  pair.delta = Series(first, treated.outcomes.segment(first, last) - control.outcomes.segment(first, last));
  pair.ddelta = backward_difference(pair.delta);
  pair.event_time = *treated.event_time;
  return pair;
}

std::vector<TreatmentAssignment> impute_treatment(std::span<const UnitSeries> units, double eta, int replicates,
                                                  std::uint64_t seed) {
  if (!(eta >= 0.0 && eta < 1.0)) throw Error(ErrorCode::invalid_eta, "eta must lie in [0, 1)");
  if (replicates < 1) throw Error(ErrorCode::invalid_argument, "replicates must be >= 1");

  std::vector<TreatmentAssignment> out;
  out.reserve(units.size() * static_cast<std::size_t>(replicates));
  const double flip = eta / 2.0;
  for (int r = 0; r < replicates; ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}, "impute"));
    for (const auto& u : units) {
      const bool flipped = uniform01(rng) < flip;
      out.push_back({u.unit_id, u.event_indicator != flipped, r});
    }
  }
  return out;
}

}  // namespace lapret
