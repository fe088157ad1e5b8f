#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "lapret/core.hpp"

namespace lapret {

inline constexpr double kRidgePenalty = 1e-6;

template <typename Scalar>
struct LogisticFit {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coefficients;  // intercept first
  bool converged = false;
  int iterations = 0;
};

/// Penalized negative log-likelihood of a logistic model; the intercept
/// (column 0 of `design`) is not penalized.
template <typename Scalar>
Scalar penalized_logistic_loss(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& design,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& response,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& beta, Scalar lambda) {
  using std::exp;
  using std::log1p;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eta = design * beta;
  Scalar loss = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + e^eta) - y * eta, evaluated without overflow
    const Scalar e = eta[i];
    const Scalar softplus = e > 0 ? e + log1p(exp(-e)) : log1p(exp(e));
    loss += softplus - response[i] * e;
  }
  return loss + lambda / 2 * beta.tail(beta.size() - 1).squaredNorm();
}

/// Ridge-penalized logistic regression by iteratively reweighted least
/// squares (Newton-Raphson on the penalized log-likelihood).
template <typename Scalar>
LogisticFit<Scalar> fit_logistic_irls(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& design,
                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& response, Scalar lambda,
                                      int max_iterations = 100, Scalar tolerance = Scalar(1e-10)) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index p = design.cols();

  Vector penalty = Vector::Constant(p, lambda);
  penalty[0] = 0;

  LogisticFit<Scalar> fit;
  fit.coefficients = Vector::Zero(p);
  for (int iter = 1; iter <= max_iterations; ++iter) {
    const Vector mu = (-(design * fit.coefficients)).array().exp().unaryExpr([](Scalar e) { return 1 / (1 + e); });
    const Vector w = (mu.array() * (1 - mu.array())).matrix();
    const Vector gradient = design.transpose() * (response - mu) - penalty.cwiseProduct(fit.coefficients);
    Matrix hessian = design.transpose() * w.asDiagonal() * design;
    hessian.diagonal() += penalty;

    Eigen::LDLT<Matrix> solver(hessian);
    if (solver.info() != Eigen::Success || !solver.isPositive() || solver.rcond() < Scalar(1e-15)) {
      throw Error(ErrorCode::singular_design, "penalized normal equations are numerically singular");
    }
    const Vector step = solver.solve(gradient);
    fit.coefficients += step;
    fit.iterations = iter;
    if (!step.allFinite()) throw Error(ErrorCode::singular_design, "non-finite Newton step");
    if (step.template lpNorm<Eigen::Infinity>() < tolerance * (1 + fit.coefficients.template lpNorm<Eigen::Infinity>())) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

/// Logistic model of the event indicator on standardized covariates.
struct PropensityModel {
  Eigen::VectorXd coefficients;  // intercept first, then one per covariate
  Eigen::VectorXd center;        // per-covariate mean used for standardization
  Eigen::VectorXd scale;         // per-covariate sd (1 for constant columns)
  bool converged = false;
  int iterations = 0;
  int max_iterations = 100;

  Eigen::Index dimension() const { return center.size(); }
  double logit(const Eigen::VectorXd& covariates) const;
  double score(const Eigen::VectorXd& covariates) const { return 1.0 / (1.0 + std::exp(-logit(covariates))); }
};

struct MatchSet {
  std::vector<std::pair<UnitId, UnitId>> pairs;  // (treated, control), in selection order
  std::vector<UnitId> unmatched_treated;
  std::optional<double> caliper;

  bool operator==(const MatchSet&) const = default;
};

PropensityModel fit_propensity(std::span<const UnitSeries> units, int max_iterations = 100);

/// Indices of treated units in greedy processing order: descending score,
/// ties by ascending unit_id.
std::vector<std::size_t> treated_processing_order(std::span<const UnitSeries> units, std::span<const double> scores);

/// Greedy 1:1 nearest-neighbour matching on the logit scale, without
/// replacement. Ties go to the smallest control unit_id.
MatchSet match(std::span<const UnitSeries> units, const PropensityModel& model, std::optional<double> caliper = {});

}  // namespace lapret
