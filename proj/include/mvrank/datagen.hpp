#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mvrank/core.hpp"
#include "mvrank/rng.hpp"

// Reproducible generators for the three simulation scenarios: an
// 8-endpoint Gaussian location family, a mixed continuous/binary family
// with a logistic link, and a survival family with Cox-exponential event
// times under uniform censoring.

namespace mvrank::datagen {

struct ScenarioConfig {
  int scenario = 1;
  Eigen::Index m = 50, n = 50;
  double r = 1.0;    // effect multiplier
  double rho = 0.3;  // equicorrelation (scenarios 1 and 3)
  std::uint64_t seed = 0;
};

namespace detail {

inline Eigen::MatrixXd equicorrelated(Eigen::Index d, double rho) {
  if (d > 1 && (rho <= -1.0 / (static_cast<double>(d) - 1.0) || rho >= 1.0))
    throw error("equicorrelation rho out of the positive-definite range");
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(d, d, rho);
  sigma.diagonal().setOnes();
  return sigma;
}

inline Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw error("covariance matrix is not positive definite");
  return llt.matrixL();
}

/// rows x d Gaussian draws with mean `mu` and Cholesky factor `chol`.
inline Eigen::MatrixXd draw_mvn(rng::Stream& stream, const Eigen::VectorXd& mu,
                                const Eigen::MatrixXd& chol, Eigen::Index rows) {
  const Eigen::Index d = mu.size();
  Eigen::MatrixXd z(rows, d);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < d; ++k) z(i, k) = stream.next_gaussian();
  Eigen::MatrixXd out = z * chol.transpose();
  out.rowwise() += mu.transpose();
  return out;
}

inline void require_config(const ScenarioConfig& cfg) {
  if (cfg.m < 1 || cfg.n < 1) throw error("arm sizes must be >= 1");
}

inline constexpr std::uint64_t kDatagenTag = 0xDA7Au;

}  // namespace detail

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Scenario 1: d=8 Gaussian endpoints, x ~ N(mu, Sigma), y ~ N(r*mu,
/// Sigma), equicorrelated Sigma. r=1 is the null configuration.
inline TwoSampleData gen_scenario1(const ScenarioConfig& cfg) {
  detail::require_config(cfg);
  constexpr Eigen::Index d = 8;
  Eigen::VectorXd mu(d);
  mu << 1.0, 0.1, 0.2, 0.3, 0.1, 0.8, 0.1, 0.0;
  const Eigen::MatrixXd chol =
      detail::cholesky_factor(detail::equicorrelated(d, cfg.rho));
  auto stream = rng::Stream::substream(
      cfg.seed, {detail::kDatagenTag, 1, rng::tag(cfg.r), rng::tag(cfg.rho)});

  TwoSampleData data;
  data.arm_x = detail::draw_mvn(stream, mu, chol, cfg.m);
  data.arm_y = detail::draw_mvn(stream, cfg.r * mu, chol, cfg.n);
  data.schema.assign(d, EndpointKind::continuous);
  for (Eigen::Index k = 0; k < d; ++k)
    data.names.push_back("ep" + std::to_string(k + 1));
  return make_dataset(std::move(data));
}

/// Scenario 2: three correlated Gaussian endpoints plus a binary endpoint
/// wired to them through a logistic link with intercept -3 and
/// coefficients (0.1, 0.4, 0.1). Arm y's continuous means shift by -r*nu;
/// r=0 is the null configuration.
inline TwoSampleData gen_scenario2(const ScenarioConfig& cfg) {
  detail::require_config(cfg);
  Eigen::VectorXd mu(3), nu(3), beta(3);
  mu << 150.0, 6.0, 250.0;
  nu << 10.0, 0.1, 10.0;
  beta << 0.1, 0.4, 0.1;
  Eigen::MatrixXd sigma(3, 3);
  sigma << 100.0, 7.0, 0.6,
           7.0, 1.0, 0.4,
           0.6, 0.4, 225.0;
  const Eigen::MatrixXd chol = detail::cholesky_factor(sigma);
  auto stream = rng::Stream::substream(
      cfg.seed, {detail::kDatagenTag, 2, rng::tag(cfg.r)});

  const Eigen::MatrixXd x3 = detail::draw_mvn(stream, mu, chol, cfg.m);
  const Eigen::MatrixXd y3 =
      detail::draw_mvn(stream, mu - cfg.r * nu, chol, cfg.n);

  TwoSampleData data;
  data.arm_x.resize(cfg.m, 4);
  data.arm_y.resize(cfg.n, 4);
  data.arm_x.leftCols(3) = x3;
  data.arm_y.leftCols(3) = y3;
  for (Eigen::Index i = 0; i < cfg.m; ++i) {
    const double p = logistic(-3.0 + x3.row(i) * beta);
    data.arm_x(i, 3) = stream.next_double() < p ? 1.0 : 0.0;
  }
  for (Eigen::Index j = 0; j < cfg.n; ++j) {
    const double p = logistic(-3.0 + y3.row(j) * beta);
    data.arm_y(j, 3) = stream.next_double() < p ? 1.0 : 0.0;
  }
  data.schema = {EndpointKind::continuous, EndpointKind::continuous,
                 EndpointKind::continuous, EndpointKind::discrete};
  data.names = {"marker1", "marker2", "marker3", "response"};
  return make_dataset(std::move(data));
}

/// Inverse-probability event time for the constant-baseline-hazard Cox
/// model: T = -log(u) / (lambda * exp(beta' cov)).
inline double cox_event_time(double u, const Eigen::VectorXd& covariates,
                             const Eigen::VectorXd& beta, double lambda) {
  return -std::log(u) / (lambda * std::exp(beta.dot(covariates)));
}

/// Scenario 3: d=6 with a right-censored survival endpoint at index 0.
/// Covariates are equicorrelated Gaussians (arm y shifted by -r*nu),
/// event times follow the Cox-exponential model with lambda=0.1, and
/// censoring times are U(0,3). Records the realized censoring fraction in
/// meta["censoring_fraction"]. r=0 is the null configuration.
inline TwoSampleData gen_scenario3(const ScenarioConfig& cfg) {
  detail::require_config(cfg);
  Eigen::VectorXd mu(5), nu(5), beta(5);
  mu << 3.0, 2.0, 2.0, 1.0, 1.0;
  nu << 1.0, 0.1, 0.0, 0.1, 0.2;
  beta << 0.5, 0.2, 0.3, 0.3, 0.5;
  constexpr double lambda = 0.1;
  const Eigen::MatrixXd chol =
      detail::cholesky_factor(detail::equicorrelated(5, cfg.rho));
  auto stream = rng::Stream::substream(
      cfg.seed, {detail::kDatagenTag, 3, rng::tag(cfg.r), rng::tag(cfg.rho)});

  const Eigen::MatrixXd cov_x = detail::draw_mvn(stream, mu, chol, cfg.m);
  const Eigen::MatrixXd cov_y =
      detail::draw_mvn(stream, mu - cfg.r * nu, chol, cfg.n);

  TwoSampleData data;
  data.arm_x.resize(cfg.m, 6);
  data.arm_y.resize(cfg.n, 6);
  data.arm_x.rightCols(5) = cov_x;
  data.arm_y.rightCols(5) = cov_y;
  std::vector<bool> ev_x(cfg.m), ev_y(cfg.n);
  Eigen::Index censored_count = 0;
  for (Eigen::Index i = 0; i < cfg.m; ++i) {
    const double t = cox_event_time(stream.next_double_open(), cov_x.row(i), beta, lambda);
    const double c = 3.0 * stream.next_double();
    data.arm_x(i, 0) = std::min(t, c);
    ev_x[i] = t <= c;
    censored_count += !ev_x[i];
  }
  for (Eigen::Index j = 0; j < cfg.n; ++j) {
    const double t = cox_event_time(stream.next_double_open(), cov_y.row(j), beta, lambda);
    const double c = 3.0 * stream.next_double();
    data.arm_y(j, 0) = std::min(t, c);
    ev_y[j] = t <= c;
    censored_count += !ev_y[j];
  }
  data.events_x = std::move(ev_x);
  data.events_y = std::move(ev_y);
  data.schema = {EndpointKind::time_to_event, EndpointKind::continuous,
                 EndpointKind::continuous,    EndpointKind::continuous,
                 EndpointKind::continuous,    EndpointKind::continuous};
  data.names = {"time", "cov1", "cov2", "cov3", "cov4", "cov5"};
  data.meta["censoring_fraction"] =
      static_cast<double>(censored_count) / static_cast<double>(cfg.m + cfg.n);
  return make_dataset(std::move(data));
}

inline TwoSampleData generate(const ScenarioConfig& cfg) {
  switch (cfg.scenario) {
    case 1: return gen_scenario1(cfg);
    case 2: return gen_scenario2(cfg);
    case 3: return gen_scenario3(cfg);
    default: throw error("scenario must be 1, 2, or 3");
  }
}

}  // namespace mvrank::datagen
