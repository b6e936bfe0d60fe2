#pragma once

// Shrinkage prior families on a single regression coefficient:
//
//   laplace         f(b) = 1/(2s) exp(-|b|/s)
//   student_t       f(b) = (1 + b^2/(s^2 d))^(-(d+1)/2) / (s sqrt(d) B(1/2, d/2))
//   gdp             f(b) = alpha/(2 eta) (1 + |b|/eta)^(-(alpha+1))
//   horseshoe_like  f(b) = G(b0+1/2) G(a0+b0) U(b0+1/2, 3/2-a0, b^2/(2 xi))
//                          / (sqrt(2 pi xi) G(a0) G(b0))
//   gaussian        N(0, v), the conjugate oracle
//
// All five are symmetric about zero. The horseshoe_like marginal comes from
// b | tau ~ N(0, tau), tau | lambda ~ Ga(a0, rate lambda),
// lambda ~ Ga(b0, rate xi).

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "shrinklab/errors.hpp"
#include "shrinklab/quadrature.hpp"
#include "shrinklab/rng.hpp"
#include "shrinklab/specfun.hpp"

namespace shrinklab {

enum class Family { laplace, student_t, gdp, horseshoe_like, gaussian };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::laplace: return "laplace";
    case Family::student_t: return "student_t";
    case Family::gdp: return "gdp";
    case Family::horseshoe_like: return "horseshoe_like";
    case Family::gaussian: return "gaussian";
  }
  return "unknown";
}

inline Family parse_family(std::string_view name) {
  for (Family f : {Family::laplace, Family::student_t, Family::gdp, Family::horseshoe_like,
                   Family::gaussian})
    if (family_name(f) == name) return f;
  throw ValidationError("unknown prior family '" + std::string(name) + "'", "/family");
}

struct Laplace {
  double s = 1.0;
};
struct StudentT {
  double s = 1.0;
  double dof = 3.0;
};
struct Gdp {
  double alpha = 3.0;
  double eta = 1.0;
};
struct HorseshoeLike {
  double a0 = 1.0;
  double b0 = 2.0;
  double xi = 1.0;
};
struct GaussianOracle {
  double v = 1.0;
};

using PriorSpec = std::variant<Laplace, StudentT, Gdp, HorseshoeLike, GaussianOracle>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline Family family_of(const PriorSpec& prior) {
  return static_cast<Family>(prior.index());
}

inline void validate(const PriorSpec& prior) {
  auto pos = [](double x, const char* field) {
    detail::require(x > 0.0 && std::isfinite(x),
                    std::string("prior parameter ") + field + " must be positive and finite",
                    std::string("/") + field);
  };
  std::visit(overloaded{
                 [&](const Laplace& l) { pos(l.s, "s"); },
                 [&](const StudentT& t) {
                   pos(t.s, "s");
                   pos(t.dof, "dof");
                 },
                 [&](const Gdp& g) {
                   pos(g.alpha, "alpha");
                   pos(g.eta, "eta");
                 },
                 [&](const HorseshoeLike& h) {
                   pos(h.a0, "a0");
                   pos(h.b0, "b0");
                   pos(h.xi, "xi");
                 },
                 [&](const GaussianOracle& g) { pos(g.v, "v"); },
             },
             prior);
}

// The scale-type hyperparameter a schedule controls: s, s, eta, xi, v.
inline double hyper_of(const PriorSpec& prior) {
  return std::visit(overloaded{
                        [](const Laplace& l) { return l.s; },
                        [](const StudentT& t) { return t.s; },
                        [](const Gdp& g) { return g.eta; },
                        [](const HorseshoeLike& h) { return h.xi; },
                        [](const GaussianOracle& g) { return g.v; },
                    },
                    prior);
}

inline PriorSpec with_hyper(PriorSpec prior, double hyper) {
  std::visit(overloaded{
                 [&](Laplace& l) { l.s = hyper; },
                 [&](StudentT& t) { t.s = hyper; },
                 [&](Gdp& g) { g.eta = hyper; },
                 [&](HorseshoeLike& h) { h.xi = hyper; },
                 [&](GaussianOracle& g) { g.v = hyper; },
             },
             prior);
  return prior;
}

// Non-scale parameters used when a family is instantiated from a schedule.
struct PriorShape {
  double dof = 3.0;
  double alpha = 3.0;
  double a0 = 1.0;
  double b0 = 2.0;
};

inline PriorSpec make_prior(Family family, double hyper, const PriorShape& shape = {}) {
  PriorSpec prior;
  switch (family) {
    case Family::laplace: prior = Laplace{hyper}; break;
    case Family::student_t: prior = StudentT{hyper, shape.dof}; break;
    case Family::gdp: prior = Gdp{shape.alpha, hyper}; break;
    case Family::horseshoe_like: prior = HorseshoeLike{shape.a0, shape.b0, hyper}; break;
    case Family::gaussian: prior = GaussianOracle{hyper}; break;
  }
  validate(prior);
  return prior;
}

namespace detail {

inline double horseshoe_log_norm(const HorseshoeLike& h) {
  return std::lgamma(h.b0 + 0.5) + std::lgamma(h.a0 + h.b0) -
         0.5 * std::log(2.0 * std::numbers::pi * h.xi) - std::lgamma(h.a0) - std::lgamma(h.b0);
}

inline double horseshoe_log_density(const HorseshoeLike& h, double beta) {
  const double a = h.b0 + 0.5;
  const double b = 1.5 - h.a0;
  if (beta == 0.0) {
    if (b >= 1.0) return std::numeric_limits<double>::infinity();
    return horseshoe_log_norm(h) + log_confluent_U_at_zero(a, b);
  }
  UOptions opt;
  const double z = beta * beta / (2.0 * h.xi);
  if (z < opt.small_z) {
    const double lz = 2.0 * std::log(std::abs(beta)) - std::log(2.0 * h.xi);
    return horseshoe_log_norm(h) + confluent_U_small_z_log(a, b, lz).log_value;
  }
  if (std::abs(beta) > 1e8) opt.z_switch = 0.0;
  return horseshoe_log_norm(h) + confluent_U(a, b, z, opt).log_value;
}

// log(0.5 * erfc(u)) without underflow for large u.
inline double log_half_erfc(double u) {
  if (u < 25.0) return std::log(0.5 * std::erfc(u));
  const double u2 = u * u;
  return -u2 - std::log(2.0 * u * std::sqrt(std::numbers::pi)) +
         std::log1p(-0.5 / u2 + 0.75 / (u2 * u2));
}

inline quad::Options density_quad_options() {
  quad::Options opt;
  opt.abs_tol = 1e-12;
  opt.rel_tol = 1e-10;
  opt.max_intervals = 4000;
  return opt;
}

// int_lo^hi f for the horseshoe_like marginal, 0 <= lo < hi.
inline double horseshoe_mass(const HorseshoeLike& h, double lo, double hi) {
  auto f = [&](double x) { return std::exp(horseshoe_log_density(h, x)); };
  quad::Result r;
  if (std::isinf(hi)) {
    const double scale = std::max(lo, std::sqrt(2.0 * h.xi));
    r = quad::integrate_half_line([&](double t) { return scale * f(lo + scale * t); }, 0.0,
                                  density_quad_options());
  } else {
    // The density spikes on the sqrt(xi) scale near zero, which a single
    // Kronrod panel over [lo, hi] can step over; split by decades.
    const double width = std::sqrt(2.0 * h.xi);
    std::vector<double> cuts{lo};
    for (double c = width; c < hi; c *= 10.0)
      if (c > lo) cuts.push_back(c);
    cuts.push_back(hi);
    double total = 0.0;
    for (std::size_t i = 1; i < cuts.size(); ++i) {
      auto piece = quad::integrate(f, cuts[i - 1], cuts[i], density_quad_options());
      if (!piece.converged)
        throw NumericalError("horseshoe_like mass quadrature did not converge");
      total += piece.value;
    }
    return total;
  }
  if (!r.converged) throw NumericalError("horseshoe_like mass quadrature did not converge");
  return r.value;
}

// log pr(beta > x) for x >= 0.
inline double log_upper_tail(const PriorSpec& prior, double x) {
  return std::visit(
      overloaded{
          [&](const Laplace& l) { return std::log(0.5) - x / l.s; },
          [&](const StudentT& t) {
            const double u = x / t.s;
            const double w = t.dof / (t.dof + u * u);
            return std::log(0.5) + std::log(reg_inc_beta(0.5 * t.dof, 0.5, w));
          },
          [&](const Gdp& g) { return std::log(0.5) - g.alpha * std::log1p(x / g.eta); },
          [&](const HorseshoeLike& h) {
            return std::log(horseshoe_mass(h, x, std::numeric_limits<double>::infinity()));
          },
          [&](const GaussianOracle& g) { return log_half_erfc(x / std::sqrt(2.0 * g.v)); },
      },
      prior);
}

}  // namespace detail

inline double log_density(const PriorSpec& prior, double beta) {
  return std::visit(
      overloaded{
          [&](const Laplace& l) { return -std::log(2.0 * l.s) - std::abs(beta) / l.s; },
          [&](const StudentT& t) {
            return -std::log(t.s) - 0.5 * std::log(t.dof) - log_beta(0.5, 0.5 * t.dof) -
                   0.5 * (t.dof + 1.0) * std::log1p(beta * beta / (t.s * t.s * t.dof));
          },
          [&](const Gdp& g) {
            return std::log(g.alpha / (2.0 * g.eta)) -
                   (g.alpha + 1.0) * std::log1p(std::abs(beta) / g.eta);
          },
          [&](const HorseshoeLike& h) { return detail::horseshoe_log_density(h, beta); },
          [&](const GaussianOracle& g) {
            return -0.5 * std::log(2.0 * std::numbers::pi * g.v) - beta * beta / (2.0 * g.v);
          },
      },
      prior);
}

inline double density(const PriorSpec& prior, double beta) {
  return std::exp(log_density(prior, beta));
}

inline double cdf(const PriorSpec& prior, double x) {
  if (x == 0.0) return 0.5;
  const double tail = std::exp(detail::log_upper_tail(prior, std::abs(x)));
  return x > 0.0 ? 1.0 - tail : tail;
}

// log pr(|beta - center| < radius).
inline double log_interval_probability(const PriorSpec& prior, double center, double radius) {
  detail::require(radius > 0.0, "interval radius must be positive", "/radius");
  const double c = std::abs(center);
  const double lo = c - radius;
  const double hi = c + radius;
  if (const auto* h = std::get_if<HorseshoeLike>(&prior)) {
    const double mass = lo >= 0.0 ? detail::horseshoe_mass(*h, lo, hi)
                                  : detail::horseshoe_mass(*h, 0.0, -lo) +
                                        detail::horseshoe_mass(*h, 0.0, hi);
    return std::log(std::min(mass, 1.0));
  }
  const double log_s_hi = detail::log_upper_tail(prior, hi);
  if (lo >= 0.0) {
    const double log_s_lo = detail::log_upper_tail(prior, lo);
    return log_s_lo + std::log1p(-std::exp(log_s_hi - log_s_lo));
  }
  const double log_s_neg = detail::log_upper_tail(prior, -lo);
  return std::log1p(-(std::exp(log_s_hi) + std::exp(log_s_neg)));
}

inline double interval_probability(const PriorSpec& prior, double center, double radius) {
  return std::exp(log_interval_probability(prior, center, radius));
}

// E(beta^2). Throws when the moment is infinite.
inline double second_moment(const PriorSpec& prior) {
  return std::visit(
      overloaded{
          [](const Laplace& l) { return 2.0 * l.s * l.s; },
          [](const StudentT& t) {
            detail::require(t.dof > 2.0, "student_t second moment is infinite for dof <= 2",
                            "/dof");
            return t.dof * t.s * t.s / (t.dof - 2.0);
          },
          [](const Gdp& g) {
            detail::require(g.alpha > 2.0, "gdp second moment is infinite for alpha <= 2",
                            "/alpha");
            return 2.0 * g.eta * g.eta / (g.alpha * g.alpha - 3.0 * g.alpha + 2.0);
          },
          [](const HorseshoeLike& h) {
            detail::require(h.b0 > 1.0,
                            "horseshoe_like second moment is infinite for b0 <= 1", "/b0");
            return h.xi * std::exp(std::lgamma(h.a0 + 1.0) + std::lgamma(h.b0 - 1.0) -
                                   std::lgamma(h.a0) - std::lgamma(h.b0));
          },
          [](const GaussianOracle& g) { return g.v; },
      },
      prior);
}

inline bool has_finite_second_moment(const PriorSpec& prior) {
  try {
    second_moment(prior);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

// i.i.d. draws; deterministic given the seed.
inline std::vector<double> sample_prior(const PriorSpec& prior, std::size_t m,
                                        std::uint64_t seed) {
  validate(prior);
  detail::require(m >= 1, "sample size must be positive", "/m");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto laplace = [&](double scale) {
    double u = unif(rng);
    while (u == 0.0) u = unif(rng);
    return u < 0.5 ? scale * std::log(2.0 * u) : -scale * std::log(2.0 * (1.0 - u));
  };

  std::vector<double> out(m);
  std::visit(overloaded{
                 [&](const Laplace& l) {
                   for (auto& x : out) x = laplace(l.s);
                 },
                 [&](const StudentT& t) {
                   std::student_t_distribution<double> st(t.dof);
                   for (auto& x : out) x = t.s * st(rng);
                 },
                 [&](const Gdp& g) {
                   // lambda ~ Ga(alpha, 1), beta | lambda ~ Laplace(eta / lambda).
                   std::gamma_distribution<double> rate(g.alpha, 1.0);
                   for (auto& x : out) x = laplace(g.eta / rate(rng));
                 },
                 [&](const HorseshoeLike& h) {
                   std::gamma_distribution<double> lambda_dist(h.b0, 1.0 / h.xi);
                   for (auto& x : out) {
                     const double lambda = lambda_dist(rng);
                     std::gamma_distribution<double> tau_dist(h.a0, 1.0 / lambda);
                     x = std::sqrt(tau_dist(rng)) * normal(rng);
                   }
                 },
                 [&](const GaussianOracle& g) {
                   for (auto& x : out) x = std::sqrt(g.v) * normal(rng);
                 },
             },
             prior);
  return out;
}

struct ScheduleSpec {
  Family family = Family::laplace;
  double C = 1.0;
  double rho = 1.0;
};

// Scale schedules under which each family concentrates fast enough:
//   laplace, student_t, gdp:  C / (sqrt(p) n^(rho/2) log n)
//   horseshoe_like:           C / (p n^rho log n)
// gaussian follows the horseshoe_like form since v, like xi, is a variance.
inline double schedule_hyper(const ScheduleSpec& spec, std::size_t n, std::size_t p) {
  detail::require(n >= 2, "schedules need n >= 2 so that log n > 0", "/n");
  detail::require(p >= 1, "p must be positive", "/p");
  detail::require(spec.C > 0.0 && std::isfinite(spec.C), "C must be positive", "/C");
  detail::require(spec.rho > 0.0 && std::isfinite(spec.rho), "rho must be positive", "/rho");
  const double nd = static_cast<double>(n);
  const double pd = static_cast<double>(p);
  switch (spec.family) {
    case Family::horseshoe_like:
    case Family::gaussian:
      return spec.C / (pd * std::pow(nd, spec.rho) * std::log(nd));
    default:
      return spec.C / (std::sqrt(pd) * std::pow(nd, 0.5 * spec.rho) * std::log(nd));
  }
}

}  // namespace shrinklab
