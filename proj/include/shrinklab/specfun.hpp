#pragma once

// Special functions and chi-square tail bounds.
//
// confluent_U evaluates Tricomi's function of the second kind either from
//   U(a,b,z) = 1/Gamma(a) * int_0^inf exp(-z t) t^(a-1) (1+t)^(b-a-1) dt
// by adaptive quadrature, or for large z from the asymptotic series
//   U(a,b,z) ~ z^(-a) * sum_{m<R} (a)_m (1+a-b)_m (-z)^(-m) / m!
// truncated before its smallest term. The series is divergent, so the
// first omitted term is reported as the error estimate.

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "shrinklab/errors.hpp"
#include "shrinklab/quadrature.hpp"

namespace shrinklab {

inline double log_gamma(double x) {
  detail::require(x > 0.0 && std::isfinite(x), "log_gamma requires x > 0");
  return std::lgamma(x);
}

inline double log_beta(double a, double b) {
  detail::require(a > 0.0 && b > 0.0, "log_beta requires a, b > 0");
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double reg_inc_beta(double a, double b, double x) {
  detail::require(a > 0.0 && b > 0.0, "reg_inc_beta requires a, b > 0");
  detail::require(x >= 0.0 && x <= 1.0, "reg_inc_beta requires x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  return boost::math::ibeta(a, b, x);
}

struct UMethod {
  enum class Kind { integral, asymptotic, small_z };
  Kind kind = Kind::integral;
  int R = 0;  // number of retained series terms (asymptotic only)
};

struct UEvalResult {
  double value = 0.0;
  double log_value = 0.0;
  UMethod method;
  double est_rel_error = 0.0;
};

struct UOptions {
  double z_switch = 50.0;
  // Below this the leading terms of the z -> 0 expansion are used.
  double small_z = 1e-8;
  // Fixed truncation for the asymptotic branch; smallest-term rule when absent.
  std::optional<int> terms;
  // The asymptotic branch hands over to quadrature when its smallest term
  // is still above this (large a relative to z).
  double max_asymptotic_rel_error = 1e-10;
  int max_series_terms = 400;
};

namespace detail {

inline UEvalResult confluent_U_integral(double a, double b, double z) {
  const double lg_a = std::lgamma(a);
  quad::Options opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-10 * std::exp(std::min(lg_a, 700.0));
  opt.max_intervals = 4000;
  const bool scaled = z >= 1.0;
  quad::Result r;
  if (scaled) {
    // t = s / z moves the exponential scale to O(1).
    r = quad::integrate_half_line(
        [&](double s) {
          if (s <= 0.0) return 0.0;
          return std::exp(-s + (a - 1.0) * std::log(s) + (b - a - 1.0) * std::log1p(s / z));
        },
        0.0, opt);
  } else {
    r = quad::integrate_half_line(
        [&](double t) {
          if (t <= 0.0) return 0.0;
          return std::exp(-z * t + (a - 1.0) * std::log(t) + (b - a - 1.0) * std::log1p(t));
        },
        0.0, opt);
  }
  if (!r.converged || !(r.value > 0.0))
    throw NumericalError("confluent_U quadrature did not converge (a=" + std::to_string(a) +
                         ", b=" + std::to_string(b) + ", z=" + std::to_string(z) + ")");
  UEvalResult out;
  out.log_value = std::log(r.value) - lg_a - (scaled ? a * std::log(z) : 0.0);
  out.value = std::exp(out.log_value);
  out.method = {UMethod::Kind::integral, 0};
  out.est_rel_error = r.abs_error / r.value;
  return out;
}

inline UEvalResult confluent_U_asymptotic(double a, double b, double z,
                                          std::optional<int> terms, int max_terms) {
  const double c = 1.0 + a - b;
  // T_m = (a)_m (1+a-b)_m (-z)^(-m) / m!
  std::vector<double> t{1.0};
  double partial = 1.0;
  const int limit = terms ? *terms : max_terms;
  detail::require(limit >= 1, "asymptotic U needs at least one term");
  for (int m = 1; m <= limit; ++m) {
    const double next = t.back() * (a + m - 1) * (c + m - 1) / (m * -z);
    t.push_back(next);
    if (terms) continue;
    if (next == 0.0 || std::abs(next) > std::abs(t[t.size() - 2]) ||
        std::abs(next) <= 1e-17 * std::abs(partial))
      break;
    partial += next;
  }

  int R = static_cast<int>(t.size()) - 1;
  if (!terms) {
    R = 1;
    for (int m = 1; m < static_cast<int>(t.size()); ++m) {
      if (std::abs(t[static_cast<std::size_t>(m)]) < std::abs(t[static_cast<std::size_t>(R)])) R = m;
      if (t[static_cast<std::size_t>(m)] == 0.0) break;
    }
  }
  double sum = 0.0;
  for (int m = 0; m < R; ++m) sum += t[static_cast<std::size_t>(m)];
  const double omitted = t[static_cast<std::size_t>(R)];

  UEvalResult out;
  out.method = {UMethod::Kind::asymptotic, R};
  // Relative to the leading term z^(-a).
  out.est_rel_error = std::abs(omitted);
  out.log_value = -a * std::log(z) + std::log(std::abs(sum));
  out.value = sum > 0.0 ? std::exp(out.log_value) : std::pow(z, -a) * sum;
  return out;
}

// Leading terms of U(a,b,z) = Gamma(1-b)/Gamma(a-b+1) M(a,b,z)
//   + Gamma(b-1)/Gamma(a) z^(1-b) M(a-b+1,2-b,z), with M = 1 + O(z).
// Poles of Gamma at integer b are dropped; b = 1 uses the logarithmic form.
// Takes log z so that callers can pass arguments that underflow.
inline UEvalResult confluent_U_small_z_log(double a, double b, double lz) {
  UEvalResult out;
  out.method = {UMethod::Kind::small_z, 0};
  out.est_rel_error = 10.0 * std::exp(lz) * (1.0 + std::abs(a) + std::abs(b)) * (1.0 + std::abs(lz));
  if (b == 1.0) {
    const double v = -(lz + boost::math::digamma(a) + 2.0 * std::numbers::egamma);
    out.log_value = std::log(v) - std::lgamma(a);
    out.value = std::exp(out.log_value);
    return out;
  }
  const bool integer_b = b == std::floor(b);
  double log_t1 = -std::numeric_limits<double>::infinity(), log_t2 = log_t1;
  int s1 = 0, s2 = 0;
  if (!(integer_b && b >= 1.0)) {
    s1 = 1;
    log_t1 = boost::math::lgamma(1.0 - b, &s1) - std::lgamma(a - b + 1.0);
  }
  if (!(integer_b && b <= 1.0)) {
    s2 = 1;
    log_t2 = boost::math::lgamma(b - 1.0, &s2) - std::lgamma(a) + (1.0 - b) * lz;
  }
  const double m = std::max(log_t1, log_t2);
  const double sum = s1 * std::exp(log_t1 - m) + s2 * std::exp(log_t2 - m);
  if (!(sum > 0.0))
    throw NumericalError("confluent_U small-z expansion lost positivity (a=" + std::to_string(a) +
                         ", b=" + std::to_string(b) + ")");
  out.log_value = m + std::log(sum);
  out.value = std::exp(out.log_value);
  return out;
}

}  // namespace detail

inline UEvalResult confluent_U(double a, double b, double z, const UOptions& opt = {}) {
  detail::require(a > 0.0 && std::isfinite(a), "confluent_U requires a > 0");
  detail::require(std::isfinite(b), "confluent_U requires finite b");
  detail::require(z > 0.0 && std::isfinite(z), "confluent_U requires z > 0");
  if (z > opt.z_switch || opt.terms) {
    auto asym = detail::confluent_U_asymptotic(a, b, z, opt.terms, opt.max_series_terms);
    if (opt.terms || (asym.value > 0.0 && asym.est_rel_error <= opt.max_asymptotic_rel_error))
      return asym;
  }
  if (z < opt.small_z) return detail::confluent_U_small_z_log(a, b, std::log(z));
  return detail::confluent_U_integral(a, b, z);
}

// lim_{z->0+} U(a,b,z) = Gamma(1-b) / Gamma(a-b+1), valid for b < 1.
inline double log_confluent_U_at_zero(double a, double b) {
  detail::require(a > 0.0, "confluent_U requires a > 0");
  detail::require(b < 1.0, "U(a,b,0+) is finite only for b < 1");
  return std::lgamma(1.0 - b) - std::lgamma(a - b + 1.0);
}

// pr(chi2_p >= x) <= exp(-x/4) for x >= 8p, a simplification of the
// Laurent-Massart inequality.
inline double chi2_tail_bound(int p, double x) {
  detail::require(p >= 1, "chi2_tail_bound requires p >= 1");
  detail::require(x >= 8.0 * p, "chi2_tail_bound is only claimed for x >= 8p");
  return std::exp(-x / 4.0);
}

struct LaurentMassart {
  double threshold = 0.0;  // p + 2 sqrt(p x) + 2x
  double bound = 1.0;      // exp(-x)
};

// pr(chi2_p >= p + 2 sqrt(p x) + 2x) <= exp(-x).
inline LaurentMassart laurent_massart_bound(int p, double x_lm) {
  detail::require(p >= 1, "laurent_massart_bound requires p >= 1");
  detail::require(x_lm >= 0.0 && std::isfinite(x_lm), "laurent_massart_bound requires x >= 0");
  const double pd = static_cast<double>(p);
  return {pd + 2.0 * std::sqrt(pd * x_lm) + 2.0 * x_lm, std::exp(-x_lm)};
}

}  // namespace shrinklab
