#include "lapret/study.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <map>
#include <numeric>

#include "lapret/rng.hpp"

namespace lapret {

UnitSeries lagged_difference(const UnitSeries& unit) {
  UnitSeries out = unit;
  out.outcomes = backward_difference(unit.outcomes);
  return out;
}

std::vector<UnitSeries> apply_transform(std::span<const UnitSeries> units, Transform transform) {
  std::vector<UnitSeries> out;
  out.reserve(units.size());
  for (const auto& u : units) out.push_back(transform == Transform::lagged_diff ? lagged_difference(u) : u);
  return out;
}

StudyPlan split(std::span<const UnitSeries> units, double pilot_fraction, std::uint64_t seed, StudyConfig config) {
  if (!(pilot_fraction > 0.0 && pilot_fraction < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "pilot fraction must lie in (0, 1)");
  }
  std::array<std::vector<UnitId>, 2> strata;  // [control, treated]
  for (const auto& u : units) strata[u.event_indicator ? 1 : 0].push_back(u.unit_id);
  if (strata[0].size() < 2 || strata[1].size() < 2) {
    throw Error(ErrorCode::too_few_units, "need at least 2 treated and 2 control units");
  }

  const double n = static_cast<double>(units.size());
  const auto n_pilot = static_cast<long>(std::llround(pilot_fraction * n));
  std::array<double, 2> quota{};
  std::array<long, 2> take{};
  for (int s = 0; s < 2; ++s) {
    quota[s] = static_cast<double>(n_pilot) * static_cast<double>(strata[s].size()) / n;
    take[s] = static_cast<long>(std::floor(quota[s]));
  }
  long remaining = n_pilot - take[0] - take[1];
  // Remainder seat goes to the larger fractional part; treated wins ties.
  while (remaining-- > 0) {
    const int s = (quota[0] - take[0] > quota[1] - take[1]) ? 0 : 1;
    ++take[s];
    quota[s] = static_cast<double>(take[s]);  // consumed
  }
  for (int s = 0; s < 2; ++s) {
    take[s] = std::clamp<long>(take[s], 1, static_cast<long>(strata[s].size()) - 1);
  }

  Rng rng(derive_seed(seed, {}, "split"));
  StudyPlan plan;
  plan.config = config;
  plan.seed = seed;
  for (int s = 0; s < 2; ++s) {
    auto& ids = strata[s];
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);
    plan.pilot_unit_ids.insert(ids.begin(), ids.begin() + take[s]);
    plan.main_unit_ids.insert(ids.begin() + take[s], ids.end());
  }
  return plan;
}

std::vector<UnitSeries> select_units(std::span<const UnitSeries> units, const std::set<UnitId>& ids) {
  std::vector<UnitSeries> out;
  for (const auto& u : units) {
    if (ids.contains(u.unit_id)) out.push_back(u);
  }
  return out;
}

namespace {

std::map<UnitId, const UnitSeries*> index_by_id(std::span<const UnitSeries> units) {
  std::map<UnitId, const UnitSeries*> index;
  for (const auto& u : units) index.emplace(u.unit_id, &u);
  return index;
}

void require_both_roles(std::span<const UnitSeries> units) {
  const auto treated = std::count_if(units.begin(), units.end(), [](const auto& u) { return u.event_indicator; });
  if (treated == 0 || treated == static_cast<std::ptrdiff_t>(units.size())) {
    throw Error(ErrorCode::too_few_units, "matching needs at least one treated and one control unit");
  }
}

}  // namespace

std::vector<MatchedPair> match_pairs(std::span<const UnitSeries> units, std::optional<double> caliper) {
  require_both_roles(units);
  const auto model = fit_propensity(units);
  const auto matches = match(units, model, caliper);
  const auto index = index_by_id(units);
  std::vector<MatchedPair> pairs;
  pairs.reserve(matches.pairs.size());
  for (const auto& [treated, control] : matches.pairs) {
    pairs.push_back(build_pair(*index.at(treated), *index.at(control), static_cast<int>(pairs.size())));
  }
  return pairs;
}

PilotResult run_pilot(std::span<const UnitSeries> units, const StudyPlan& plan, PilotDiagnostics* diagnostics) {
  plan.config.params.validate();
  const auto pilot_units = apply_transform(select_units(units, plan.pilot_unit_ids), plan.config.transform);
  const auto pairs = match_pairs(pilot_units, plan.config.caliper);

  std::vector<PairLapret> estimates;
  estimates.reserve(pairs.size());
  int too_short = 0;
  for (const auto& pair : pairs) {
    try {
      estimates.push_back(estimate_pair_lapret(pair, plan.config.params));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::window_too_short) throw;
      ++too_short;
    }
  }
  if (diagnostics) *diagnostics = {static_cast<int>(pairs.size()), too_short};
  return aggregate(estimates, plan.config.aggregation, plan.config.undetected);
}

StudyResult run_main(std::span<const UnitSeries> units, const StudyPlan& plan, const PilotResult& pilot,
                     const ReadObserver& observer) {
  for (const auto& id : plan.main_unit_ids) {
    if (plan.pilot_unit_ids.contains(id)) {
      throw Error(ErrorCode::pilot_overlap, "unit " + id + " belongs to both the pilot and the main study");
    }
  }
  const auto main_units = select_units(units, plan.main_unit_ids);
  require_both_roles(main_units);
  const auto model = fit_propensity(main_units);
  const auto matches = match(main_units, model, plan.config.caliper);
  const auto index = index_by_id(main_units);

  const bool lagged = plan.config.transform == Transform::lagged_diff;
  auto has_day = [&](const UnitSeries& u, Day day) {
    return u.outcomes.contains(day) && (!lagged || u.outcomes.contains(day - 1));
  };
  auto read = [&](const UnitSeries& u, Day day) {
    if (observer) observer(u.unit_id, day);
    return lagged ? u.outcomes[day] - u.outcomes[day - 1] : u.outcomes[day];
  };

  const int window = pilot.causal_window();
  std::vector<std::vector<double>> by_day(static_cast<std::size_t>(window) + 1);
  for (const auto& [treated_id, control_id] : matches.pairs) {
    const UnitSeries& treated = *index.at(treated_id);
    const UnitSeries& control = *index.at(control_id);
    const Day event = *treated.event_time;
    for (int tau = -window; tau <= 0; ++tau) {
      const Day day = event + tau;
      if (!has_day(treated, day) || !has_day(control, day)) continue;
      by_day[static_cast<std::size_t>(tau + window)].push_back(read(treated, day) - read(control, day));
    }
  }

  StudyResult result;
  result.pilot = pilot;
  result.causal_window_days = window;
  result.n_pairs = static_cast<int>(matches.pairs.size());
  for (int tau = -window; tau <= 0; ++tau) {
    const auto& values = by_day[static_cast<std::size_t>(tau + window)];
    if (values.empty()) {
      throw Error(ErrorCode::empty_window, "no pair has data at relative day " + std::to_string(tau));
    }
    const Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
    const double n = static_cast<double>(v.size());
    const double mean = v.mean();
    // A single pair carries no spread estimate; its interval collapses.
    const double sd = v.size() > 1 ? std::sqrt((v.array() - mean).square().sum() / (n - 1)) : 0.0;
    const double half_width = kNormalQuantile975 * sd / std::sqrt(n);
    result.effects.push_back({tau, mean, mean - half_width, mean + half_width, static_cast<int>(v.size())});
  }
  return result;
}

std::uint64_t sweep_split_seed(std::uint64_t seed, std::size_t index) {
  return derive_seed(seed, {static_cast<std::uint64_t>(index)}, "sensitivity");
}

std::vector<LabeledResult> sensitivity_sweep(std::span<const LabeledDataset> datasets, const StudyConfig& config,
                                             double pilot_fraction, std::uint64_t seed) {
  if (datasets.empty()) throw Error(ErrorCode::invalid_argument, "sensitivity sweep needs at least one dataset");
  std::vector<std::future<LabeledResult>> jobs;
  jobs.reserve(datasets.size());
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      const auto& ds = datasets[i];
      auto plan = split(ds.units, pilot_fraction, sweep_split_seed(seed, i), config);
      auto pilot = run_pilot(ds.units, plan);
      auto result = run_main(ds.units, plan, pilot);
      return LabeledResult{ds.label, std::move(plan), std::move(result)};
    }));
  }
  std::vector<LabeledResult> out;
  out.reserve(jobs.size());
  for (auto& job : jobs) out.push_back(job.get());
  return out;
}

}  // namespace lapret
