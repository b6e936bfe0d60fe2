#pragma once

// Posterior sampling for beta under an i.i.d. shrinkage prior with known
// noise variance, by adaptive random-walk Metropolis on the marginal
// posterior. The proposal is spherical Gaussian with one scalar scale,
// tuned by Robbins-Monro toward acceptance 0.234 during burn-in and frozen
// afterwards so the retained draws target the exact posterior.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "shrinklab/errors.hpp"
#include "shrinklab/model_core.hpp"
#include "shrinklab/priors.hpp"
#include "shrinklab/rng.hpp"

namespace shrinklab {

struct InitOls {};
struct InitZeros {};
using InitialState = std::variant<InitOls, InitZeros, VectorXd>;

struct SamplerConfig {
  std::size_t iterations = 20000;
  std::size_t burn_in = 5000;
  InitialState initial = InitOls{};
  double proposal_scale_init = 0.1;
  bool adapt = true;
  std::uint64_t seed = 0;
};

struct PosteriorSamples {
  MatrixXd draws;  // (iterations - burn_in) x p
  double acceptance_rate = 0.0;
  double final_proposal_scale = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr double kTargetAcceptance = 0.234;

inline void validate(const SamplerConfig& cfg) {
  detail::require(cfg.iterations >= 1, "iterations must be positive", "/iterations");
  detail::require(cfg.burn_in < cfg.iterations, "burn_in must be below iterations", "/burn_in");
  detail::require(cfg.proposal_scale_init > 0.0 && std::isfinite(cfg.proposal_scale_init),
                  "proposal_scale_init must be positive", "/proposal_scale_init");
}

// log f(y | beta) + sum_j log pi(beta_j), dropping constants in beta.
inline double log_posterior(const VectorXd& beta, const Dataset& ds, double sigma2,
                            const PriorSpec& prior) {
  detail::require(beta.size() == ds.X.cols(), "beta has the wrong dimension", "/beta");
  detail::require(sigma2 > 0.0, "sigma2 must be positive", "/sigma2");
  double lp = -(ds.y - ds.X * beta).squaredNorm() / (2.0 * sigma2);
  for (Eigen::Index j = 0; j < beta.size(); ++j) lp += log_density(prior, beta(j));
  return lp;
}

namespace detail {

// Log posterior with the likelihood in the form
//   RSS(beta) = RSS(beta_hat) + (beta - beta_hat)' X'X (beta - beta_hat),
// O(p^2) per evaluation and free of the y'y cancellation.
class PosteriorTarget {
 public:
  PosteriorTarget(const Dataset& ds, double sigma2, PriorSpec prior)
      : xtx_(ds.X.transpose() * ds.X), sigma2_(sigma2), prior_(std::move(prior)) {
    if (ds.X.rows() >= ds.X.cols()) {
      Eigen::ColPivHouseholderQR<MatrixXd> qr(ds.X);
      if (qr.rank() == ds.X.cols()) {
        center_ = qr.solve(ds.y);
        rss_min_ = (ds.y - ds.X * center_).squaredNorm();
        full_rank_ = true;
      }
    }
    if (!full_rank_) {
      center_ = VectorXd::Zero(ds.X.cols());
      rss_min_ = ds.y.squaredNorm();
      xty_ = ds.X.transpose() * ds.y;
    }
  }

  double log_likelihood(const VectorXd& beta) const {
    if (full_rank_) {
      const VectorXd d = beta - center_;
      return -(rss_min_ + d.dot(xtx_ * d)) / (2.0 * sigma2_);
    }
    return -(rss_min_ - 2.0 * beta.dot(xty_) + beta.dot(xtx_ * beta)) / (2.0 * sigma2_);
  }

  double log_prior(const VectorXd& beta) const {
    double lp = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) lp += log_density(prior_, beta(j));
    return lp;
  }

  double operator()(const VectorXd& beta) const { return log_likelihood(beta) + log_prior(beta); }

  bool full_rank() const { return full_rank_; }
  const VectorXd& ols() const { return center_; }

 private:
  MatrixXd xtx_;
  VectorXd xty_;
  VectorXd center_;
  double rss_min_ = 0.0;
  double sigma2_;
  PriorSpec prior_;
  bool full_rank_ = false;
};

}  // namespace detail

inline PosteriorSamples sample_posterior(const Dataset& ds, double sigma2, const PriorSpec& prior,
                                         const SamplerConfig& cfg) {
  validate(cfg);
  validate(prior);
  detail::require(sigma2 > 0.0, "sigma2 must be positive", "/sigma2");
  const detail::PosteriorTarget target(ds, sigma2, prior);
  const Eigen::Index p = ds.X.cols();

  VectorXd current = std::visit(
      overloaded{
          [&](const InitOls&) -> VectorXd {
            if (!target.full_rank())
              throw SingularDesignError("OLS initialization needs a full-rank design");
            return target.ols();
          },
          [&](const InitZeros&) -> VectorXd { return VectorXd::Zero(p); },
          [&](const VectorXd& v) -> VectorXd {
            detail::require(v.size() == p, "initial state has the wrong dimension", "/initial");
            return v;
          },
      },
      cfg.initial);

  double current_lp = target(current);
  if (!std::isfinite(current_lp))
    throw NumericalError("log posterior is not finite at the initial state");

  Rng rng = make_rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  PosteriorSamples out;
  out.seed = cfg.seed;
  out.draws.resize(static_cast<Eigen::Index>(cfg.iterations - cfg.burn_in), p);
  double log_scale = std::log(cfg.proposal_scale_init);
  std::size_t accepted = 0;
  VectorXd proposal(p);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const double scale = std::exp(log_scale);
    for (Eigen::Index j = 0; j < p; ++j) proposal(j) = current(j) + scale * normal(rng);
    const double prop_lp = target(proposal);
    const double log_ratio = prop_lp - current_lp;
    const double accept_prob = std::isnan(log_ratio) ? 0.0 : std::min(1.0, std::exp(log_ratio));
    const bool accept = unif(rng) < accept_prob;
    if (accept) {
      current.swap(proposal);
      current_lp = prop_lp;
    }
    if (it < cfg.burn_in) {
      if (cfg.adapt) {
        const double gain = std::pow(static_cast<double>(it) + 1.0, -0.6);
        log_scale += gain * (accept_prob - kTargetAcceptance);
      }
    } else {
      if (accept) ++accepted;
      out.draws.row(static_cast<Eigen::Index>(it - cfg.burn_in)) = current.transpose();
    }
  }
  out.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(cfg.iterations - cfg.burn_in);
  out.final_proposal_scale = std::exp(log_scale);
  return out;
}

// Posterior mass outside the epsilon-ball around beta0, estimated by the
// fraction of draws with ||beta - beta0|| > epsilon.
inline double ball_exclusion_probability(const PosteriorSamples& samples, const VectorXd& beta0,
                                         double epsilon) {
  detail::require(samples.draws.rows() > 0, "no posterior draws");
  detail::require(beta0.size() == samples.draws.cols(), "beta0 has the wrong dimension");
  detail::require(epsilon >= 0.0, "epsilon must be non-negative", "/epsilon");
  std::size_t outside = 0;
  for (Eigen::Index i = 0; i < samples.draws.rows(); ++i)
    if ((samples.draws.row(i).transpose() - beta0).norm() > epsilon) ++outside;
  return static_cast<double>(outside) / static_cast<double>(samples.draws.rows());
}

struct GaussianPosterior {
  VectorXd mean;
  MatrixXd covariance;
};

// Conjugate posterior under beta_j ~ N(0, v):
//   A = X'X / sigma2 + I / v,  mean = A^{-1} X'y / sigma2,  cov = A^{-1}.
inline GaussianPosterior conjugate_gaussian_posterior(const Dataset& ds, double sigma2, double v) {
  detail::require(sigma2 > 0.0, "sigma2 must be positive", "/sigma2");
  detail::require(v > 0.0, "v must be positive", "/v");
  const Eigen::Index p = ds.X.cols();
  MatrixXd A = ds.X.transpose() * ds.X / sigma2;
  A.diagonal().array() += 1.0 / v;
  const Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericalError("posterior precision is not positive definite");
  GaussianPosterior out;
  out.covariance = llt.solve(MatrixXd::Identity(p, p));
  out.mean = llt.solve(ds.X.transpose() * ds.y / sigma2);
  return out;
}

// Standard error of a chain mean by non-overlapping batch means with
// floor(sqrt(N)) batches.
inline double batch_means_se(std::span<const double> chain) {
  const std::size_t N = chain.size();
  detail::require(N >= 4, "batch means needs at least 4 draws");
  const std::size_t batches = static_cast<std::size_t>(std::sqrt(static_cast<double>(N)));
  const std::size_t len = N / batches;
  std::vector<double> means(batches);
  double grand = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += chain[i];
    means[b] = s / static_cast<double>(len);
    grand += means[b];
  }
  grand /= static_cast<double>(batches);
  double var = 0.0;
  for (double m : means) var += (m - grand) * (m - grand);
  var /= static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

inline double batch_means_se(const Eigen::VectorXd& chain) {
  return batch_means_se(std::span<const double>(chain.data(), static_cast<std::size_t>(chain.size())));
}

// Type-7 sample quantile.
inline double quantile(std::vector<double> values, double prob) {
  detail::require(!values.empty(), "quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace shrinklab
