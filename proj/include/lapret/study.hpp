#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lapret/core.hpp"
#include "lapret/estimator.hpp"
#include "lapret/matching.hpp"

namespace lapret {

enum class Transform { levels, lagged_diff };

struct StudyConfig {
  LapretParams params;
  Aggregation aggregation = Aggregation::mean;
  UndetectedPolicy undetected = UndetectedPolicy::exclude;
  Transform transform = Transform::levels;
  std::optional<double> caliper;

  bool operator==(const StudyConfig&) const = default;
};

struct StudyPlan {
  std::set<UnitId> pilot_unit_ids;
  std::set<UnitId> main_unit_ids;
  StudyConfig config;
  std::uint64_t seed = 0;

  bool operator==(const StudyPlan&) const = default;
};

struct EffectEstimate {
  int relative_day = 0;  // 0 is the event day
  double estimate = 0;
  double ci_low = 0;
  double ci_high = 0;
  int n_pairs = 0;

  bool operator==(const EffectEstimate&) const = default;
};

struct StudyResult {
  PilotResult pilot;
  std::vector<EffectEstimate> effects;
  int causal_window_days = 0;
  int n_pairs = 0;

  bool operator==(const StudyResult&) const = default;
};

/// Observes every main-study outcome read, on the analysed (transformed) scale.
using ReadObserver = std::function<void(const UnitId&, Day)>;

inline constexpr double kNormalQuantile975 = 1.959963984540054;

/// y*(t) = y(t) - y(t-1); the first day is dropped.
UnitSeries lagged_difference(const UnitSeries& unit);
std::vector<UnitSeries> apply_transform(std::span<const UnitSeries> units, Transform transform);

/// Stratified (by event indicator) uniform split. The pilot receives
/// round(pilot_fraction * N) units, apportioned across strata by largest
/// remainder with at least one unit of each stratum on both sides.
StudyPlan split(std::span<const UnitSeries> units, double pilot_fraction, std::uint64_t seed, StudyConfig config = {});

/// Units of `units` whose ids are in `ids`, in input order.
std::vector<UnitSeries> select_units(std::span<const UnitSeries> units, const std::set<UnitId>& ids);

/// Fits a propensity model on `units`, matches, and builds pairs in match order.
std::vector<MatchedPair> match_pairs(std::span<const UnitSeries> units, std::optional<double> caliper);

struct PilotDiagnostics {
  int n_pairs = 0;
  int n_window_too_short = 0;
};

PilotResult run_pilot(std::span<const UnitSeries> units, const StudyPlan& plan, PilotDiagnostics* diagnostics = nullptr);

/// Matches the main-study units, keeps for each pair only the days
/// [T^event - floor(d-hat), T^event], and reports per-day mean differences
/// with normal 95% intervals.
StudyResult run_main(std::span<const UnitSeries> units, const StudyPlan& plan, const PilotResult& pilot,
                     const ReadObserver& observer = {});

struct LabeledDataset {
  std::string label;
  std::vector<UnitSeries> units;
};

struct LabeledResult {
  std::string label;
  StudyPlan plan;
  StudyResult result;
};

/// Runs split + pilot + main per dataset; dataset i uses split seed
/// derive_seed(seed, {i}). Datasets are processed concurrently.
std::vector<LabeledResult> sensitivity_sweep(std::span<const LabeledDataset> datasets, const StudyConfig& config,
                                             double pilot_fraction, std::uint64_t seed);

/// Seed used by sensitivity_sweep for dataset `index`.
std::uint64_t sweep_split_seed(std::uint64_t seed, std::size_t index);

}  // namespace lapret
