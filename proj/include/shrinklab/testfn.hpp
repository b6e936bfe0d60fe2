#pragma once

// The OLS-based consistent test Phi_n = 1{ ||beta_hat - beta0|| > eps/2 }
// and Monte Carlo estimates of its error rates against the exponential
// bound exp(-eps^2 n Lmin^2 / (16 sigma2)).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "shrinklab/errors.hpp"
#include "shrinklab/model_core.hpp"
#include "shrinklab/rng.hpp"

namespace shrinklab {

struct TestOutcome {
  bool phi = false;
  double distance = 0.0;
  double threshold = 0.0;
};

inline TestOutcome phi_test(const Dataset& ds, double epsilon) {
  detail::require(epsilon > 0.0, "epsilon must be positive", "/epsilon");
  const VectorXd beta_hat = ols_estimate(ds.X, ds.y);
  TestOutcome out;
  out.distance = (beta_hat - ds.beta0).norm();
  out.threshold = 0.5 * epsilon;
  out.phi = out.distance > out.threshold;
  return out;
}

inline double lemma1_exponent(double epsilon, std::size_t n, double lambda_min_scaled,
                              double sigma2) {
  return epsilon * epsilon * static_cast<double>(n) * lambda_min_scaled * lambda_min_scaled /
         (16.0 * sigma2);
}

inline double lemma1_bound(double epsilon, std::size_t n, double lambda_min_scaled,
                           double sigma2) {
  detail::require(epsilon >= 0.0 && n >= 1 && lambda_min_scaled >= 0.0 && sigma2 > 0.0,
                  "lemma1_bound arguments must be positive");
  return std::exp(-lemma1_exponent(epsilon, n, lambda_min_scaled, sigma2));
}

// The bound passes through pr(chi2_p > eps^2 n Lmin^2 / (4 sigma2)); the
// exp(-x/4) simplification is claimed only once that argument reaches 8p.
inline bool lemma1_in_validity_region(double epsilon, std::size_t n, std::size_t p,
                                      double lambda_min_scaled, double sigma2) {
  return 4.0 * lemma1_exponent(epsilon, n, lambda_min_scaled, sigma2) >=
         8.0 * static_cast<double>(p);
}

struct ErrorRateEstimate {
  double rate = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
  double bound = 1.0;
  double lambda_min_scaled = 0.0;
  bool in_validity_region = false;
};

struct Type2Estimate {
  double max_rate = 0.0;
  double standard_error = 0.0;  // of the maximizing direction
  std::vector<double> rates;    // per direction
  std::size_t trials = 0;
  double bound = 1.0;
  double lambda_min_scaled = 0.0;
  bool in_validity_region = false;
};

namespace detail {

inline double binomial_se(double rate, std::size_t trials) {
  return std::sqrt(rate * (1.0 - rate) / static_cast<double>(trials));
}

// Rejection rate of Phi_n when the data come from beta_true, for a fixed
// design. Noise for trial t is drawn from a single stream seeded by `seed`.
inline double rejection_rate(const MatrixXd& X, const OlsSolver& ols, const VectorXd& beta0,
                             const VectorXd& beta_true, double sigma2, double epsilon,
                             std::size_t trials, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(sigma2));
  const VectorXd mean = X * beta_true;
  VectorXd y(mean.size());
  std::size_t rejections = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = mean(i) + normal(rng);
    if ((ols.solve(y) - beta0).norm() > 0.5 * epsilon) ++rejections;
  }
  return static_cast<double>(rejections) / static_cast<double>(trials);
}

}  // namespace detail

// Type-I error E_{beta0}(Phi_n) on the design generated from config.
inline ErrorRateEstimate type1_error_mc(const ModelConfig& config, double epsilon,
                                        std::size_t trials, std::uint64_t seed) {
  detail::require(epsilon > 0.0, "epsilon must be positive", "/epsilon");
  detail::require(trials >= 1, "trials must be positive", "/trials");
  const Dataset ds = generate_dataset(config);
  const OlsSolver ols(ds.X);
  const auto summary = design_summary(ds.X);
  ErrorRateEstimate out;
  out.trials = trials;
  out.lambda_min_scaled = summary.lambda_min_scaled;
  out.bound = lemma1_bound(epsilon, config.n, summary.lambda_min_scaled, config.sigma2);
  out.in_validity_region = lemma1_in_validity_region(epsilon, config.n, config.p,
                                                     summary.lambda_min_scaled, config.sigma2);
  out.rate = detail::rejection_rate(ds.X, ols, ds.beta0, ds.beta0, config.sigma2, epsilon,
                                    trials, derive_seed(seed, 0));
  out.standard_error = detail::binomial_se(out.rate, trials);
  return out;
}

// Type-II error E_beta(1 - Phi_n) maximized over random alternatives
// beta = beta0 + eps u on the boundary of the eps-ball. This approximates
// the supremum over {||beta - beta0|| > eps}; interior points of that set
// are easier to reject.
inline Type2Estimate type2_error_mc(const ModelConfig& config, double epsilon,
                                    std::size_t directions, std::size_t trials,
                                    std::uint64_t seed) {
  detail::require(epsilon > 0.0, "epsilon must be positive", "/epsilon");
  detail::require(directions >= 1, "directions must be positive", "/directions");
  detail::require(trials >= 1, "trials must be positive", "/trials");
  const Dataset ds = generate_dataset(config);
  const OlsSolver ols(ds.X);
  const auto summary = design_summary(ds.X);

  Type2Estimate out;
  out.trials = trials;
  out.lambda_min_scaled = summary.lambda_min_scaled;
  out.bound = lemma1_bound(epsilon, config.n, summary.lambda_min_scaled, config.sigma2);
  out.in_validity_region = lemma1_in_validity_region(epsilon, config.n, config.p,
                                                     summary.lambda_min_scaled, config.sigma2);

  Rng dir_rng = make_rng(derive_seed(seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t k = 0; k < directions; ++k) {
    VectorXd u(static_cast<Eigen::Index>(config.p));
    for (Eigen::Index j = 0; j < u.size(); ++j) u(j) = normal(dir_rng);
    u.normalize();
    const VectorXd alt = ds.beta0 + epsilon * u;
    const double reject = detail::rejection_rate(ds.X, ols, ds.beta0, alt, config.sigma2,
                                                 epsilon, trials, derive_seed(seed, k + 1));
    out.rates.push_back(1.0 - reject);
  }
  const auto it = std::max_element(out.rates.begin(), out.rates.end());
  out.max_rate = *it;
  out.standard_error = detail::binomial_se(out.max_rate, trials);
  return out;
}

}  // namespace shrinklab
