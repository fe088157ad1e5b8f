#include "lapret/estimator.hpp"

#include <numeric>

namespace lapret {

void LapretParams::validate() const {
  if (!(std::isfinite(alpha) && alpha > 0)) throw Error(ErrorCode::invalid_argument, "alpha must be finite and > 0");
  if (!(std::isfinite(epsilon) && epsilon > 0)) {
    throw Error(ErrorCode::invalid_argument, "epsilon must be finite and > 0");
  }
}

PairLapret estimate_pair_lapret(const MatchedPair& pair, const LapretParams& params) {
  params.validate();
  const Day event = pair.event_time;
  if (!pair.delta.contains(event) || event - pair.delta.first_day < 4) {
    throw Error(ErrorCode::window_too_short,
                "pair " + std::to_string(pair.pair_id) + " has fewer than 4 days before its event");
  }
  PairLapret out;
  out.pair_id = pair.pair_id;
  out.lapret_day = last_plausible_day(pair.delta, pair.ddelta, event, params.alpha, params.epsilon);
  if (out.lapret_day) out.d = event - *out.lapret_day;
  return out;
}

PilotResult aggregate(std::span<const PairLapret> per_pair, Aggregation method, UndetectedPolicy undetected) {
  if (method == Aggregation::min && undetected == UndetectedPolicy::count_as_zero) {
    throw Error(ErrorCode::invalid_argument, "count_as_zero is only defined for the mean aggregate");
  }
  PilotResult out;
  out.per_pair.assign(per_pair.begin(), per_pair.end());
  std::sort(out.per_pair.begin(), out.per_pair.end(),
            [](const PairLapret& a, const PairLapret& b) { return a.pair_id < b.pair_id; });
  out.aggregation = method;
  out.undetected = undetected;

  std::vector<int> ds;
  for (const auto& p : out.per_pair) {
    if (p.d) ds.push_back(*p.d);
  }
  out.n_detected = static_cast<int>(ds.size());
  if (ds.empty()) return out;

  if (method == Aggregation::min) {
    out.d_hat = *std::min_element(ds.begin(), ds.end());
  } else {
    const double total = std::accumulate(ds.begin(), ds.end(), 0.0);
    const auto count = undetected == UndetectedPolicy::count_as_zero ? out.per_pair.size() : ds.size();
    out.d_hat = total / static_cast<double>(count);
  }
  out.d_floor = static_cast<int>(std::floor(*out.d_hat));
  return out;
}

HeuristicRanges heuristic_ranges(std::span<const MatchedPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::degenerate_input, "no pairs");
  Eigen::Index n_delta = 0, n_ddelta = 0;
  for (const auto& p : pairs) {
    n_delta += p.delta.size();
    n_ddelta += p.ddelta.size();
  }
  Eigen::VectorXd delta(n_delta), ddelta(n_ddelta);
  Eigen::Index i = 0, j = 0;
  for (const auto& p : pairs) {
    delta.segment(i, p.delta.size()) = p.delta.values;
    ddelta.segment(j, p.ddelta.size()) = p.ddelta.values;
    i += p.delta.size();
    j += p.ddelta.size();
  }
  const auto [alpha_min, alpha_max] = heuristic_bounds(delta);
  const auto [epsilon_min, epsilon_max] = heuristic_bounds(ddelta);
  return {alpha_min, alpha_max, epsilon_min, epsilon_max};
}

}  // namespace lapret
