#pragma once

// Prior concentration around a sparse truth.
//
// The posterior is strongly consistent when, for small enough Delta and d,
//   Pi(||beta - beta0|| < Delta / n^(rho/2)) > exp(-d n).
// For i.i.d. priors the ball probability is bounded below by a product of
// per-coordinate interval masses on the active set (radius
// Delta / (sqrt(p) n^(rho/2))) times a Markov factor for the inactive
// coordinates, 1 - p n^rho E(beta^2) / Delta^2. generic_lower_bound uses
// exact interval masses; family_lower_bound uses the closed-form
// "interval length x density infimum" bounds, which lie below it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "shrinklab/errors.hpp"
#include "shrinklab/priors.hpp"
#include "shrinklab/specfun.hpp"

namespace shrinklab {

struct ConcentrationQuery {
  std::size_t n = 1;
  std::size_t p = 1;
  std::size_t q = 0;
  double rho = 1.0;
  double Delta = 1.0;
  double sup_beta0 = 0.0;
  PriorSpec prior = Laplace{1.0};
  // Rate constant for the exp(-d n) comparison; satisfied is false without it.
  std::optional<double> d;
  // Per-coordinate active values for generic_lower_bound; sup_beta0 for
  // every active coordinate when absent.
  std::optional<std::vector<double>> active_values;
};

struct BoundReport {
  double lower_bound = 0.0;
  double neg_log_bound = std::numeric_limits<double>::infinity();
  std::optional<double> dn;
  bool satisfied = false;
  double markov_factor = 0.0;
  double active_factor_log = 0.0;
  bool vacuous = true;
};

struct AdmissibleRanges {
  double epsilon = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double sigma2 = 1.0;
  double Delta_max = 0.0;  // eps^2 Lmin^2 / (48 Lmax^2)
  double b = 0.0;          // eps^2 Lmin^2 / (16 sigma2)

  // eps^2 Lmin^2 / (32 sigma2) - 3 Delta Lmax^2 / (2 sigma2)
  double d_max(double Delta) const {
    return epsilon * epsilon * lambda_min * lambda_min / (32.0 * sigma2) -
           3.0 * Delta * lambda_max * lambda_max / (2.0 * sigma2);
  }

  bool admits(double Delta, double d) const {
    return Delta > 0.0 && Delta < Delta_max && d > 0.0 && d < d_max(Delta);
  }
};

inline AdmissibleRanges admissible_ranges(double epsilon, double lambda_min, double lambda_max,
                                          double sigma2) {
  using detail::require;
  require(epsilon > 0.0, "epsilon must be positive", "/epsilon");
  require(lambda_min > 0.0, "lambda_min must be positive", "/lambda_min");
  require(lambda_max >= lambda_min, "lambda_max must be at least lambda_min", "/lambda_max");
  require(sigma2 > 0.0, "sigma2 must be positive", "/sigma2");
  AdmissibleRanges r;
  r.epsilon = epsilon;
  r.lambda_min = lambda_min;
  r.lambda_max = lambda_max;
  r.sigma2 = sigma2;
  const double e2l2 = epsilon * epsilon * lambda_min * lambda_min;
  r.Delta_max = e2l2 / (48.0 * lambda_max * lambda_max);
  r.b = e2l2 / (16.0 * sigma2);
  return r;
}

namespace detail {

inline void validate(const ConcentrationQuery& q) {
  require(q.n >= 1, "n must be positive", "/n");
  require(q.p >= 1, "p must be positive", "/p");
  require(q.q <= q.p, "q must not exceed p", "/q");
  require(q.rho > 0.0 && std::isfinite(q.rho), "rho must be positive", "/rho");
  require(q.Delta > 0.0 && std::isfinite(q.Delta), "Delta must be positive", "/Delta");
  require(q.sup_beta0 >= 0.0 && std::isfinite(q.sup_beta0), "sup_beta0 must be non-negative",
          "/sup_beta0");
  if (q.d) require(*q.d > 0.0, "d must be positive", "/d");
  if (q.active_values)
    require(q.active_values->size() == q.q, "active_values must have length q",
            "/active_values");
  shrinklab::validate(q.prior);
  // Every bound descends from the Markov step, which needs E(beta^2) < inf.
  second_moment(q.prior);
}

inline double active_radius(const ConcentrationQuery& q) {
  return q.Delta / (std::sqrt(static_cast<double>(q.p)) *
                    std::pow(static_cast<double>(q.n), 0.5 * q.rho));
}

inline double markov_factor(const ConcentrationQuery& q) {
  return 1.0 - static_cast<double>(q.p) * std::pow(static_cast<double>(q.n), q.rho) *
                   second_moment(q.prior) / (q.Delta * q.Delta);
}

inline BoundReport finish(const ConcentrationQuery& q, double active_log, double markov) {
  BoundReport r;
  r.markov_factor = markov;
  r.active_factor_log = active_log;
  if (q.d) r.dn = *q.d * static_cast<double>(q.n);
  if (!(markov > 0.0)) {
    r.vacuous = true;
    r.lower_bound = 0.0;
    r.neg_log_bound = std::numeric_limits<double>::infinity();
    r.satisfied = false;
    return r;
  }
  r.vacuous = false;
  r.neg_log_bound = -(active_log + std::log(markov));
  r.lower_bound = std::clamp(std::exp(-r.neg_log_bound), 0.0, 1.0);
  r.satisfied = r.dn.has_value() && r.neg_log_bound < *r.dn;
  return r;
}

// The z argument at which the horseshoe_like density is bounded below on
// the active interval: sup^2/xi + Delta/(p n^rho xi). It dominates the
// worst-case (sup + r)^2 / (2 xi) when Delta <= 1; for Delta > 1 the Delta
// term is squared so the bound stays valid.
inline double horseshoe_bound_z(const ConcentrationQuery& q, const HorseshoeLike& h) {
  const double pn = static_cast<double>(q.p) * std::pow(static_cast<double>(q.n), q.rho);
  const double delta_term = std::max(q.Delta, q.Delta * q.Delta);
  return q.sup_beta0 * q.sup_beta0 / h.xi + delta_term / (pn * h.xi);
}

struct HorseshoeActive {
  double log_value;
  double z;
  bool asymptotic;
  double log_U;
};

inline HorseshoeActive horseshoe_active(const ConcentrationQuery& q, const HorseshoeLike& h,
                                        double radius) {
  const double a = h.b0 + 0.5;
  const double z = horseshoe_bound_z(q, h);
  const UOptions uopt;
  const bool asym = z > uopt.z_switch;
  // Large z: leading term of the U expansion, U ~ z^(-a).
  const double log_U = asym ? -a * std::log(z) : confluent_U(a, 1.5 - h.a0, z, uopt).log_value;
  return {std::log(2.0 * radius) + horseshoe_log_norm(h) + log_U, z, asym, log_U};
}

// Closed-form per-coordinate active lower bound (log), centered at sup_beta0.
inline double family_active_log(const ConcentrationQuery& q, double r) {
  const double c = q.sup_beta0;
  return std::visit(
      overloaded{
          [&](const Laplace& l) { return std::log(r / l.s) - (c + r) / l.s; },
          [&](const StudentT& t) {
            const double ds2 = t.dof * t.s * t.s;
            return std::log(2.0 * r) - std::log(t.s) - 0.5 * std::log(t.dof) -
                   log_beta(0.5, 0.5 * t.dof) -
                   0.5 * (t.dof + 1.0) * std::log(1.0 + 2.0 * c * c / ds2 + 2.0 * r * r / ds2);
          },
          [&](const Gdp& g) {
            return std::log(g.alpha * r / g.eta) -
                   (g.alpha + 1.0) * std::log(1.0 + c / g.eta + r / g.eta);
          },
          [&](const HorseshoeLike& h) { return horseshoe_active(q, h, r).log_value; },
          [&](const GaussianOracle& g) {
            return std::log(2.0 * r) - 0.5 * std::log(2.0 * std::numbers::pi * g.v) -
                   (c + r) * (c + r) / (2.0 * g.v);
          },
      },
      q.prior);
}

}  // namespace detail

inline BoundReport generic_lower_bound(const ConcentrationQuery& q) {
  detail::validate(q);
  const double r = detail::active_radius(q);
  double active_log = 0.0;
  if (q.active_values) {
    for (double b : *q.active_values) active_log += log_interval_probability(q.prior, b, r);
  } else if (q.q > 0) {
    active_log = static_cast<double>(q.q) * log_interval_probability(q.prior, q.sup_beta0, r);
  }
  return detail::finish(q, active_log, detail::markov_factor(q));
}

inline BoundReport family_lower_bound(const ConcentrationQuery& q) {
  detail::validate(q);
  const double r = detail::active_radius(q);
  const double active_log =
      q.q > 0 ? static_cast<double>(q.q) * detail::family_active_log(q, r) : 0.0;
  return detail::finish(q, active_log, detail::markov_factor(q));
}

inline bool theorem1_check(const BoundReport& report, double d, std::size_t n) {
  detail::require(d > 0.0, "d must be positive", "/d");
  return !report.vacuous && report.neg_log_bound < d * static_cast<double>(n);
}

struct NegLogTerm {
  std::string name;
  double value = 0.0;
};

struct NegLogDecomposition {
  std::vector<NegLogTerm> terms;
  double total = 0.0;           // sum of terms
  double family_neg_log = 0.0;  // -log(family_lower_bound)
  bool identity_holds = false;  // total == family_neg_log within 1e-6 relative
  std::string dominating;       // largest finite |term|
  std::string expected_dominating;  // the sup|beta0| term that grows fastest in n
};

// Additive terms of -log(family_lower_bound) once the scale follows its
// schedule with constant C. With L = log n:
//   laplace    -q log D + q log C - q log L - log M + q D L / C
//              + q sqrt(p) n^(rho/2) L sup / C
//   student_t  q log(sqrt(d) C B(1/2,d/2) / (2D)) - q log L - log M
//              + q (d+1)/2 log(1 + 2 p n^rho L^2 sup^2/(d C^2) + 2 D^2 L^2/(d C^2))
//   gdp        -q log(alpha D) - alpha q log C - q log L - log M
//              + (alpha+1) q log(C + D L + sqrt(p) n^(rho/2) L sup)
//   horseshoe  -q log(sqrt2 D G(b0+1/2) G(a0+b0) / (sqrt(C pi) G(a0) G(b0)))
//              - log M - q/2 log L + q (b0+1/2) log(p n^rho L sup^2/C + D L/C)
// where M is the Markov factor.
inline NegLogDecomposition neg_log_decomposition(const ConcentrationQuery& q, double C) {
  detail::validate(q);
  detail::require(q.n >= 2, "decomposition needs n >= 2", "/n");
  const Family fam = family_of(q.prior);
  detail::require(fam != Family::gaussian, "the gaussian oracle has no bound decomposition",
                  "/prior/family");
  const double expected = schedule_hyper({fam, C, q.rho}, q.n, q.p);
  const double hyper = hyper_of(q.prior);
  detail::require(std::abs(hyper - expected) <= 1e-9 * expected,
                  "prior scale does not follow the schedule for the given C", "/prior");

  const double n = static_cast<double>(q.n);
  const double p = static_cast<double>(q.p);
  const double qd = static_cast<double>(q.q);
  const double L = std::log(n);
  const double D = q.Delta;
  const double sup = q.sup_beta0;
  const double markov = detail::markov_factor(q);
  const double markov_term =
      markov > 0.0 ? -std::log(markov) : std::numeric_limits<double>::infinity();

  NegLogDecomposition out;
  auto add = [&](std::string name, double v) { out.terms.push_back({std::move(name), v}); };
  std::visit(
      overloaded{
          [&](const Laplace&) {
            add("log_delta", -qd * std::log(D));
            add("log_C", qd * std::log(C));
            add("log_log_n", -qd * std::log(L));
            add("markov", markov_term);
            add("radius_over_scale", qd * D * L / C);
            add("sup_over_scale", qd * std::sqrt(p) * std::pow(n, 0.5 * q.rho) * L * sup / C);
          },
          [&](const StudentT& t) {
            const double d0 = t.dof;
            add("constant", qd * std::log(std::sqrt(d0) * C * std::exp(log_beta(0.5, 0.5 * d0)) /
                                          (2.0 * D)));
            add("log_log_n", -qd * std::log(L));
            add("markov", markov_term);
            const double bracket = 1.0 + 2.0 * p * std::pow(n, q.rho) * L * L * sup * sup /
                                             (d0 * C * C) +
                                   2.0 * D * D * L * L / (d0 * C * C);
            add("density_bracket", qd * 0.5 * (d0 + 1.0) * std::log(bracket));
          },
          [&](const Gdp& g) {
            add("constant", -qd * std::log(g.alpha * D));
            add("log_C", -g.alpha * qd * std::log(C));
            add("log_log_n", -qd * std::log(L));
            add("markov", markov_term);
            add("density_bracket",
                (g.alpha + 1.0) * qd *
                    std::log(C + D * L + std::sqrt(p) * std::pow(n, 0.5 * q.rho) * L * sup));
          },
          [&](const HorseshoeLike& h) {
            const double kconst = std::sqrt(2.0) * D *
                                  std::exp(std::lgamma(h.b0 + 0.5) + std::lgamma(h.a0 + h.b0) -
                                           std::lgamma(h.a0) - std::lgamma(h.b0)) /
                                  (std::sqrt(C) * std::sqrt(std::numbers::pi));
            add("constant", -qd * std::log(kconst));
            add("markov", markov_term);
            add("log_log_n", -0.5 * qd * std::log(L));
            const double z = detail::horseshoe_bound_z(q, h);
            const double a = h.b0 + 0.5;
            const auto act = detail::horseshoe_active(q, h, detail::active_radius(q));
            if (!act.asymptotic && q.q > 0) {
              // Small z: U is evaluated exactly rather than by its leading term.
              add("u_correction", -qd * (act.log_U + a * std::log(z)));
            }
            add("sup_bracket", qd * a * std::log(z));
          },
          [&](const GaussianOracle&) {},
      },
      q.prior);

  out.expected_dominating = out.terms.back().name;
  out.total = 0.0;
  for (const auto& t : out.terms) out.total += t.value;
  out.family_neg_log = family_lower_bound(q).neg_log_bound;
  if (std::isinf(out.total) || std::isinf(out.family_neg_log)) {
    out.identity_holds = std::isinf(out.total) && std::isinf(out.family_neg_log);
  } else {
    out.identity_holds = std::abs(out.total - out.family_neg_log) <=
                         1e-6 * std::max(1.0, std::abs(out.family_neg_log));
  }
  // A vacuous Markov factor is infinite at every n; rank the finite terms.
  auto it = std::max_element(out.terms.begin(), out.terms.end(), [](const auto& x, const auto& y) {
    const double ax = std::isfinite(x.value) ? std::abs(x.value) : -1.0;
    const double ay = std::isfinite(y.value) ? std::abs(y.value) : -1.0;
    return ax < ay;
  });
  out.dominating = it->name;
  return out;
}

struct KappaTail {
  double kappa = 0.0;
  double log_tail_bound = 0.0;  // -kappa^2 / (4 sigma2)
  double tail_bound = 0.0;
};

// kappa_n = n^((1+rho)/2) and the chi-square bound
// pr(||y - X beta0|| > kappa_n) <= exp(-kappa_n^2 / (4 sigma2)),
// valid when kappa_n^2 / sigma2 >= 8n.
inline KappaTail kappa_tail_check(std::size_t n, double rho, double sigma2) {
  detail::require(n >= 1, "n must be positive", "/n");
  detail::require(rho > 0.0, "rho must be positive", "/rho");
  detail::require(sigma2 > 0.0, "sigma2 must be positive", "/sigma2");
  const double nd = static_cast<double>(n);
  const double kappa2 = std::pow(nd, 1.0 + rho);
  detail::require(kappa2 / sigma2 >= 8.0 * nd * (1.0 - 1e-12),
                  "kappa_n^2 / sigma2 < 8n: the chi-square bound does not apply");
  KappaTail out;
  out.kappa = std::sqrt(kappa2);
  out.log_tail_bound = -kappa2 / (4.0 * sigma2);
  out.tail_bound = std::exp(out.log_tail_bound);
  return out;
}

}  // namespace shrinklab
