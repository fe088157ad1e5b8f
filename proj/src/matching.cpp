#include "lapret/matching.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace lapret {

double PropensityModel::logit(const Eigen::VectorXd& covariates) const {
  if (covariates.size() != dimension()) {
    throw Error(ErrorCode::dimension_mismatch, "covariate dimension " + std::to_string(covariates.size()) +
                                                   " does not match model dimension " + std::to_string(dimension()));
  }
  const Eigen::VectorXd z = (covariates - center).cwiseQuotient(scale);
  return coefficients[0] + coefficients.tail(z.size()).dot(z);
}

PropensityModel fit_propensity(std::span<const UnitSeries> units, int max_iterations) {
  if (units.empty()) throw Error(ErrorCode::too_few_units, "no units to fit");
  const auto n_treated = std::count_if(units.begin(), units.end(), [](const auto& u) { return u.event_indicator; });
  if (n_treated == 0 || n_treated == static_cast<std::ptrdiff_t>(units.size())) {
    throw Error(ErrorCode::no_variation, "all units share one event indicator value");
  }

  const Eigen::Index n = static_cast<Eigen::Index>(units.size());
  const Eigen::Index k = units.front().covariates.size();
  Eigen::MatrixXd x(n, k);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& u = units[static_cast<std::size_t>(i)];
    if (u.covariates.size() != k) throw Error(ErrorCode::dimension_mismatch, "unit " + u.unit_id);
    if (!u.covariates.allFinite()) throw Error(ErrorCode::invalid_argument, "unit " + u.unit_id + " has non-finite covariates");
    x.row(i) = u.covariates.transpose();
    y[i] = u.event_indicator ? 1.0 : 0.0;
  }

  PropensityModel model;
  model.max_iterations = max_iterations;
  model.center = x.colwise().mean().transpose();
  model.scale = Eigen::VectorXd::Ones(k);
  if (n > 1) {
    for (Eigen::Index c = 0; c < k; ++c) {
      const double sd = std::sqrt((x.col(c).array() - model.center[c]).square().sum() / double(n - 1));
      if (sd > 0) model.scale[c] = sd;
    }
  }

  Eigen::MatrixXd design(n, k + 1);
  design.col(0).setOnes();
  design.rightCols(k) = (x.rowwise() - model.center.transpose()).array().rowwise() / model.scale.transpose().array();

  const auto fit = fit_logistic_irls<double>(design, y, kRidgePenalty, max_iterations);
  model.coefficients = fit.coefficients;
  model.converged = fit.converged;
  model.iterations = fit.iterations;
  return model;
}

std::vector<std::size_t> treated_processing_order(std::span<const UnitSeries> units, std::span<const double> scores) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i].event_indicator) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return units[a].unit_id < units[b].unit_id;
  });
  return order;
}

MatchSet match(std::span<const UnitSeries> units, const PropensityModel& model, std::optional<double> caliper) {
  std::vector<double> logits(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) logits[i] = model.logit(units[i].covariates);

  // Controls sorted by id so the first minimum found is the tie-break winner.
  std::vector<std::size_t> controls;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (!units[i].event_indicator) controls.push_back(i);
  }
  std::sort(controls.begin(), controls.end(),
            [&](std::size_t a, std::size_t b) { return units[a].unit_id < units[b].unit_id; });
  std::vector<bool> used(controls.size(), false);

  MatchSet out;
  out.caliper = caliper;
  for (std::size_t t : treated_processing_order(units, logits)) {
    std::optional<std::size_t> best;
    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < controls.size(); ++c) {
      if (used[c]) continue;
      const double distance = std::abs(logits[t] - logits[controls[c]]);
      if (distance < best_distance) {
        best_distance = distance;
        best = c;
      }
    }
    if (!best || (caliper && best_distance > *caliper)) {
      out.unmatched_treated.push_back(units[t].unit_id);
      continue;
    }
    used[*best] = true;
    out.pairs.emplace_back(units[t].unit_id, units[controls[*best]].unit_id);
  }
  return out;
}

}  // namespace lapret
