#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "shrinklab/concentration.hpp"

using namespace shrinklab;

namespace {

ConcentrationQuery unit_query(PriorSpec prior, std::size_t q, double sup) {
  ConcentrationQuery c;
  c.n = 1;
  c.p = 1;
  c.q = q;
  c.rho = 1.0;
  c.Delta = 1.0;
  c.sup_beta0 = sup;
  c.prior = prior;
  return c;
}

ConcentrationQuery scheduled_query(Family fam, std::size_t n, double Delta, double sup = 1.0) {
  ConcentrationQuery c;
  c.n = n;
  c.p = static_cast<std::size_t>(std::floor(std::pow(double(n), 0.4)));
  c.q = 3;
  c.rho = 1.0;
  c.Delta = Delta;
  c.sup_beta0 = sup;
  c.prior = make_prior(fam, schedule_hyper({fam, 1.0, 1.0}, n, c.p));
  return c;
}

// Monte Carlo estimate of Pi(||beta - beta0|| < Delta / n^(rho/2)) with
// every active coordinate at sup_beta0.
std::pair<double, double> mc_ball(const ConcentrationQuery& q, std::size_t m, std::uint64_t seed) {
  const auto draws = sample_prior(q.prior, m * q.p, seed);
  const double r2 = q.Delta * q.Delta / std::pow(double(q.n), q.rho);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.p; ++j) {
      const double b0 = j < q.q ? q.sup_beta0 : 0.0;
      const double d = draws[i * q.p + j] - b0;
      s += d * d;
    }
    inside += s < r2;
  }
  const double est = double(inside) / double(m);
  return {est, std::sqrt(est * (1.0 - est) / double(m))};
}

}  // namespace

TEST(AdmissibleRanges, Examples) {
  const auto a = admissible_ranges(1.0, 0.5, 2.0, 1.0);
  EXPECT_NEAR(a.Delta_max, 0.25 / 192.0, 1e-15);
  EXPECT_NEAR(a.d_max(0.001), 0.0078125 - 0.006, 1e-15);
  EXPECT_NEAR(a.b, 0.015625, 1e-15);
  const auto b = admissible_ranges(1.0, 1.0, 1.0, 1.0);
  EXPECT_NEAR(b.Delta_max, 1.0 / 48.0, 1e-15);
  EXPECT_NEAR(b.b, 1.0 / 16.0, 1e-15);
  EXPECT_NEAR(b.d_max(1.0 / 48.0), 0.0, 1e-15);
  EXPECT_TRUE(b.admits(0.01, 0.001));
  EXPECT_FALSE(b.admits(1.0 / 48.0, 1e-6));
  EXPECT_THROW(admissible_ranges(1.0, 2.0, 1.0, 1.0), ValidationError);
}

TEST(GenericBound, EmptyActiveSetIsMarkovFactor) {
  const auto r = generic_lower_bound(unit_query(Laplace{0.1}, 0, 0.0));
  EXPECT_NEAR(r.markov_factor, 0.98, 1e-15);
  EXPECT_NEAR(r.lower_bound, 0.98, 1e-15);
  EXPECT_FALSE(r.vacuous);
}

TEST(GenericBound, LaplaceSingleCoordinate) {
  const auto r = generic_lower_bound(unit_query(Laplace{0.1}, 1, 0.5));
  const double exact = (1.0 - 0.5 * std::exp(-15.0)) - 0.5 * std::exp(-5.0);
  EXPECT_NEAR(std::exp(r.active_factor_log), exact, 1e-14);
  EXPECT_NEAR(r.lower_bound, 0.98 * exact, 1e-14);
  EXPECT_NEAR(r.lower_bound, 0.9767, 1e-4);
}

TEST(GenericBound, VacuousMarkovFactor) {
  auto q = unit_query(Laplace{1.0}, 1, 0.5);
  const auto r = generic_lower_bound(q);
  EXPECT_TRUE(r.vacuous);
  EXPECT_EQ(r.lower_bound, 0.0);
  EXPECT_TRUE(std::isinf(r.neg_log_bound));
  q.d = 1e9;
  EXPECT_FALSE(generic_lower_bound(q).satisfied);
  EXPECT_TRUE(family_lower_bound(q).vacuous);
}

TEST(GenericBound, PerCoordinateActiveValues) {
  auto q = unit_query(Laplace{0.1}, 1, 0.5);
  q.p = 2;
  q.q = 2;
  q.active_values = std::vector<double>{0.5, 0.1};
  const auto per = generic_lower_bound(q);
  q.active_values.reset();
  const auto sup = generic_lower_bound(q);
  EXPECT_GT(per.lower_bound, sup.lower_bound);
}

TEST(GenericBound, InfiniteMomentRejected) {
  EXPECT_THROW(generic_lower_bound(unit_query(HorseshoeLike{1.0, 0.5, 0.1}, 1, 0.5)),
               ValidationError);
  EXPECT_THROW(family_lower_bound(unit_query(StudentT{0.1, 2.0}, 1, 0.5)), ValidationError);
}

TEST(FamilyBound, LaplaceClosedForm) {
  const auto r = family_lower_bound(unit_query(Laplace{0.1}, 1, 0.5));
  EXPECT_NEAR(std::exp(r.active_factor_log), 10.0 * std::exp(-15.0), 1e-18);
  EXPECT_NEAR(std::exp(r.active_factor_log), 3.059e-6, 1e-9);
  EXPECT_NEAR(r.lower_bound, 0.98 * 10.0 * std::exp(-15.0), 1e-18);
  EXPECT_NEAR(r.lower_bound, 3.0e-6, 1e-7);
  EXPECT_LE(r.lower_bound, generic_lower_bound(unit_query(Laplace{0.1}, 1, 0.5)).lower_bound);
}

TEST(FamilyBound, StudentTBracket) {
  ConcentrationQuery q;
  q.n = 100;
  q.p = 4;
  q.q = 1;
  q.rho = 1.0;
  q.Delta = std::sqrt(4.0) * 10.0;  // radius 1
  q.sup_beta0 = 0.0;
  q.prior = StudentT{1.0, 3.0};
  const auto r = family_lower_bound(q);
  const double expected = 2.0 / (std::sqrt(3.0) * std::exp(log_beta(0.5, 1.5))) *
                          std::pow(1.0 + 2.0 / 3.0, -2.0);
  EXPECT_NEAR(std::exp(r.active_factor_log), expected, 1e-14);
  // Below the exact t_3 mass of (-1, 1).
  EXPECT_LE(std::exp(r.active_factor_log), interval_probability(q.prior, 0.0, 1.0));
}

TEST(FamilyBound, GdpClosedForm) {
  auto q = unit_query(Gdp{3.0, 0.2}, 1, 0.5);
  const auto r = family_lower_bound(q);
  EXPECT_NEAR(std::exp(r.active_factor_log), 3.0 * 1.0 / 0.2 * std::pow(1.0 + 2.5 + 5.0, -4.0),
              1e-15);
  EXPECT_LE(r.lower_bound, generic_lower_bound(q).lower_bound);
}

TEST(FamilyBound, HorseshoeAsymptoticRegime) {
  auto q = unit_query(HorseshoeLike{1.0, 2.0, 0.01}, 1, 1.0);
  q.Delta = 0.5;
  const double z = detail::horseshoe_bound_z(q, std::get<HorseshoeLike>(q.prior));
  EXPECT_NEAR(z, 150.0, 1e-12);
  const auto fam = family_lower_bound(q);
  const auto gen = generic_lower_bound(q);
  EXPECT_GT(fam.lower_bound, 0.0);
  EXPECT_LE(fam.lower_bound, gen.lower_bound);
}

TEST(FamilyBound, HorseshoeQuadratureRegime) {
  auto q = unit_query(HorseshoeLike{1.0, 2.0, 0.5}, 1, 0.3);
  q.Delta = 0.8;
  EXPECT_LT(detail::horseshoe_bound_z(q, std::get<HorseshoeLike>(q.prior)), 50.0);
  const auto fam = family_lower_bound(q);
  EXPECT_GT(fam.lower_bound, 0.0);
  EXPECT_LE(fam.lower_bound, generic_lower_bound(q).lower_bound);
}

TEST(Sandwich, FamilyBelowGenericBelowMonteCarlo) {
  std::vector<ConcentrationQuery> cases;
  for (PriorSpec prior : {PriorSpec{Laplace{0.1}}, PriorSpec{StudentT{0.1, 3.0}},
                          PriorSpec{Gdp{3.0, 0.1}}, PriorSpec{HorseshoeLike{1.0, 2.0, 0.01}}}) {
    for (std::size_t p : {1u, 2u, 4u}) {
      ConcentrationQuery q;
      q.n = 1;
      q.p = p;
      q.q = p > 1 ? p / 2 : 1;
      q.rho = 1.0;
      q.Delta = 1.0;
      q.sup_beta0 = 0.3;
      q.prior = prior;
      cases.push_back(q);
    }
  }
  std::uint64_t seed = 0;
  for (const auto& q : cases) {
    const auto fam = family_lower_bound(q);
    const auto gen = generic_lower_bound(q);
    const auto [mc, se] = mc_ball(q, 200'000, ++seed);
    EXPECT_FALSE(gen.vacuous);
    EXPECT_LE(fam.lower_bound, gen.lower_bound) << family_name(family_of(q.prior)) << " p=" << q.p;
    EXPECT_LE(gen.lower_bound, mc + 3.0 * se) << family_name(family_of(q.prior)) << " p=" << q.p;
  }
}

TEST(Theorem1Check, Examples) {
  BoundReport r;
  r.vacuous = false;
  r.neg_log_bound = 5.0;
  EXPECT_TRUE(theorem1_check(r, 0.01, 1000));
  EXPECT_FALSE(theorem1_check(r, 0.001, 1000));
  BoundReport v;
  EXPECT_FALSE(theorem1_check(v, 1e300, 1000));
}

TEST(Decomposition, TermsSumToNegativeLogBound) {
  for (Family f : {Family::laplace, Family::student_t, Family::gdp, Family::horseshoe_like})
    for (std::size_t n : {1000u, 10000u, 100000u, 1000000u})
      for (double sup : {0.0, 0.5, 1.0}) {
        const auto q = scheduled_query(f, n, 0.5, sup);
        const auto d = neg_log_decomposition(q, 1.0);
        EXPECT_TRUE(d.identity_holds) << family_name(f) << " n=" << n << " sup=" << sup
                                      << " total=" << d.total << " fam=" << d.family_neg_log;
      }
}

TEST(Decomposition, HorseshoeSmallArgumentUsesExactU) {
  auto q = scheduled_query(Family::horseshoe_like, 1000, 0.5, 1.0);
  q.q = 1;
  q.sup_beta0 = 0.0;
  const auto d = neg_log_decomposition(q, 1.0);
  bool has_correction = false;
  for (const auto& t : d.terms) has_correction |= t.name == "u_correction";
  EXPECT_TRUE(has_correction);
  EXPECT_TRUE(d.identity_holds);
}

TEST(Decomposition, LaplaceSupTermDominates) {
  const auto q = scheduled_query(Family::laplace, 10000, 0.1, 1.0);
  ASSERT_EQ(q.p, 39u);
  const auto d = neg_log_decomposition(q, 1.0);
  EXPECT_EQ(d.dominating, "sup_over_scale");
  EXPECT_EQ(d.expected_dominating, "sup_over_scale");
  const double L = std::log(1e4);
  EXPECT_NEAR(d.terms.back().value, 3.0 * std::sqrt(39.0) * 100.0 * L, 1e-9);
}

TEST(Decomposition, StudentTBracketDominatesAndDecays) {
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    const auto q = scheduled_query(Family::student_t, n, 0.1, 1.0);
    const auto d = neg_log_decomposition(q, 1.0);
    EXPECT_EQ(d.dominating, "density_bracket") << n;
    // Delta = 0.1 leaves the Markov factor vacuous on this grid; the rate
    // statement concerns the remaining terms.
    double finite = 0.0;
    for (const auto& t : d.terms)
      if (t.name != "markov") finite += t.value;
    EXPECT_LT(finite / double(n), prev);
    prev = finite / double(n);
  }
}

TEST(Decomposition, EmptyActiveSetReducesToMarkov) {
  for (Family f : {Family::laplace, Family::student_t, Family::gdp, Family::horseshoe_like}) {
    auto q = scheduled_query(f, 10000, 0.5, 1.0);
    q.q = 0;
    const auto d = neg_log_decomposition(q, 1.0);
    for (const auto& t : d.terms)
      if (t.name != "markov") EXPECT_EQ(t.value, 0.0) << family_name(f) << " " << t.name;
    EXPECT_NEAR(d.total, -std::log(detail::markov_factor(q)), 1e-12);
  }
}

TEST(Decomposition, RejectsOffScheduleScale) {
  auto q = scheduled_query(Family::laplace, 1000, 0.5);
  q.prior = Laplace{1.0};
  EXPECT_THROW(neg_log_decomposition(q, 1.0), ValidationError);
}

TEST(ScheduleDecay, NegLogOverNDecreasesUnderSchedule) {
  for (Family f : {Family::laplace, Family::student_t, Family::gdp, Family::horseshoe_like}) {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {1000u, 10000u, 100000u, 1000000u}) {
      auto q = scheduled_query(f, n, 0.5, 1.0);
      q.d = 1.0;
      const auto r = family_lower_bound(q);
      ASSERT_FALSE(r.vacuous) << family_name(f) << " n=" << n;
      EXPECT_LT(r.neg_log_bound / double(n), prev) << family_name(f) << " n=" << n;
      prev = r.neg_log_bound / double(n);
    }
    EXPECT_LT(prev, 1.0) << family_name(f);
  }
}

TEST(ScheduleDecay, FixedScaleDoesNotDecay) {
  std::vector<double> ratio;
  for (std::size_t n : {1000u, 10000u, 100000u, 1000000u}) {
    auto q = scheduled_query(Family::laplace, n, 0.5, 1.0);
    q.prior = Laplace{1.0};
    const auto r = generic_lower_bound(q);
    EXPECT_TRUE(r.vacuous) << n;
    ratio.push_back(r.neg_log_bound / double(n));
  }
  for (double x : ratio) EXPECT_TRUE(std::isinf(x));
}

TEST(KappaTail, Examples) {
  const auto k = kappa_tail_check(100, 1.0, 1.0);
  EXPECT_NEAR(k.kappa, 100.0, 1e-12);
  EXPECT_NEAR(k.log_tail_bound, -2500.0, 1e-9);
  EXPECT_NO_THROW(kappa_tail_check(8, 1.0, 1.0));
  EXPECT_THROW(kappa_tail_check(7, 1.0, 1.0), ValidationError);

  const auto k50 = kappa_tail_check(50, 1.0, 1.0);
  std::mt19937_64 rng(3);
  std::chi_squared_distribution<double> chi(50.0);
  int hits = 0;
  for (int i = 0; i < 1'000'000; ++i) hits += chi(rng) > k50.kappa * k50.kappa;
  EXPECT_EQ(hits, 0);
}
