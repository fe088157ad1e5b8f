#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "lapret/core.hpp"

namespace lapret {

struct LapretParams {
  double alpha = 10.0;
  double epsilon = 0.2;

  void validate() const;
  bool operator==(const LapretParams&) const = default;
};

/// Last day t < event_day such that
///   |delta_t| < max_{s <= event_day} |delta_s| / alpha,
///   |ddelta_t| < epsilon, and
///   some s1 < s2 in (t, event_day] have |ddelta_s1| > epsilon, |ddelta_s2| < epsilon.
/// Inequalities are strict. Days where ddelta is undefined never qualify.
template <typename Scalar>
std::optional<Day> last_plausible_day(const DaySeries<Scalar>& delta, const DaySeries<Scalar>& ddelta, Day event_day,
                                      Scalar alpha, Scalar epsilon) {
  using std::abs;
  const Day last = std::min(event_day, delta.last_day());
  if (last < delta.first_day) return std::nullopt;
  const Scalar threshold = delta.segment(delta.first_day, last).cwiseAbs().maxCoeff() / alpha;

  // Scanning backwards from event_day: `quiet_seen` tracks a quiet day strictly
  // after the current position, `burst_then_quiet` a loud day followed by one.
  bool quiet_seen = false;
  bool burst_then_quiet = false;
  const Day dd_last = std::min(event_day, ddelta.last_day());
  for (Day t = dd_last; t >= ddelta.first_day; --t) {
    const Scalar change = abs(ddelta[t]);
    if (t < event_day && burst_then_quiet && change < epsilon && delta.contains(t) && abs(delta[t]) < threshold) {
      return t;
    }
    if (change > epsilon && quiet_seen) burst_then_quiet = true;
    if (change < epsilon) quiet_seen = true;
  }
  return std::nullopt;
}

struct PairLapret {
  int pair_id = 0;
  std::optional<Day> lapret_day;
  std::optional<int> d;  // event_time - lapret_day

  bool operator==(const PairLapret&) const = default;
};

enum class Aggregation { mean, min };

/// How pairs with an empty condition set enter d-hat. `exclude` drops them;
/// `count_as_zero` treats them as d_i = 0 (mean only).
enum class UndetectedPolicy { exclude, count_as_zero };

struct PilotResult {
  std::vector<PairLapret> per_pair;
  std::optional<double> d_hat;
  std::optional<int> d_floor;
  Aggregation aggregation = Aggregation::mean;
  UndetectedPolicy undetected = UndetectedPolicy::exclude;
  int n_detected = 0;

  /// Number of pre-event days that admit causal statements (0 when absent).
  int causal_window() const { return d_floor.value_or(0); }
  bool operator==(const PilotResult&) const = default;
};

struct HeuristicRanges {
  double alpha_min = 0, alpha_max = 0;
  double epsilon_min = 0, epsilon_max = 0;

  bool operator==(const HeuristicRanges&) const = default;
};

/// Throws window_too_short when fewer than four ddelta days precede the event.
PairLapret estimate_pair_lapret(const MatchedPair& pair, const LapretParams& params);

PilotResult aggregate(std::span<const PairLapret> per_pair, Aggregation method,
                      UndetectedPolicy undetected = UndetectedPolicy::exclude);

/// (lower, upper) = max / (mean + 3 se), max / (mean + se) of a pool of
/// absolute values, where se = sample sd / sqrt(n).
template <typename Derived>
std::pair<typename Derived::Scalar, typename Derived::Scalar> heuristic_bounds(const Eigen::DenseBase<Derived>& pool) {
  using Scalar = typename Derived::Scalar;
  using std::sqrt;
  const Eigen::Index n = pool.size();
  if (n < 2) throw Error(ErrorCode::degenerate_input, "need at least two pooled values");
  const auto abs_values = pool.derived().array().abs().eval();
  const Scalar largest = abs_values.maxCoeff();
  const Scalar mean = abs_values.mean();
  if (!(mean > 0)) throw Error(ErrorCode::degenerate_input, "all pooled absolute values are zero");
  const Scalar sd = sqrt((abs_values - mean).square().sum() / Scalar(n - 1));
  const Scalar se = sd / sqrt(Scalar(n));
  return {largest / (mean + 3 * se), largest / (mean + se)};
}

/// Pools |delta| and |ddelta| over every day of every pair.
HeuristicRanges heuristic_ranges(std::span<const MatchedPair> pairs);

}  // namespace lapret
