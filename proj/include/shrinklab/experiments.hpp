#pragma once

// Grid sweeps over (n, family): posterior ball-exclusion under the
// theorem schedules, concentration-bound decay, and test-function error
// rates. Every row is a pure function of (spec, base_seed); cells run on a
// worker pool and are written back in (n, family) order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "shrinklab/concentration.hpp"
#include "shrinklab/errors.hpp"
#include "shrinklab/model_core.hpp"
#include "shrinklab/posterior.hpp"
#include "shrinklab/priors.hpp"
#include "shrinklab/rng.hpp"
#include "shrinklab/testfn.hpp"

namespace shrinklab {

struct GrowthRule {
  enum class Kind { fixed, power };
  Kind kind = Kind::fixed;
  std::size_t value = 1;  // fixed
  double exponent = 0.5;  // power: floor(n^exponent), at least 1

  std::size_t at(std::size_t n) const {
    if (kind == Kind::fixed) return value;
    const double v = std::floor(std::pow(static_cast<double>(n), exponent) + 1e-9);
    return std::max<std::size_t>(1, static_cast<std::size_t>(v));
  }

  static GrowthRule fixed(std::size_t v) { return {Kind::fixed, v, 0.0}; }
  static GrowthRule power(double e) { return {Kind::power, 0, e}; }
};

struct SweepSpec {
  std::vector<std::size_t> n_grid{200, 500, 1000, 2000};
  GrowthRule p_rule = GrowthRule::power(0.4);
  GrowthRule q_rule = GrowthRule::fixed(3);
  double epsilon = 0.5;
  double rho = 1.0;
  double C = 1.0;
  std::vector<Family> families{Family::laplace, Family::student_t, Family::gdp,
                               Family::horseshoe_like};
  std::size_t replicates = 5;
  SamplerConfig sampler;
  std::uint64_t base_seed = 0;

  double sigma2 = 1.0;
  std::vector<double> beta_nonzero{1.0, -1.0, 0.5};  // cycled to length q
  PriorShape shape;
  // Families listed here use the given scale instead of their schedule.
  std::map<Family, double> fixed_hyper;
  // Concentration columns; the concentration sweep takes its own (Delta, d).
  double Delta = 0.5;
  double d = 1.0;
  // Design constants for admissibility of (Delta, d).
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  std::size_t lemma1_trials = 10000;
  // Worker threads; 0 means hardware concurrency.
  unsigned jobs = 0;
};

struct SweepRow {
  std::size_t n = 0, p = 0, q = 0;
  std::string family;
  std::optional<double> hyper_value;
  std::optional<double> ball_exclusion_median;
  std::optional<double> ball_exclusion_iqr;
  std::optional<double> neg_log_bound;
  std::optional<bool> bound_satisfied;
  std::optional<double> lemma1_type1;
  std::optional<double> lemma1_bound;
  std::string seeds_used;
  std::string dominating_term;
  std::string status = "ok";

  bool operator==(const SweepRow&) const = default;
};

inline void validate(const SweepSpec& spec) {
  using detail::require;
  require(!spec.n_grid.empty(), "n_grid must be non-empty", "/n_grid");
  for (std::size_t i = 1; i < spec.n_grid.size(); ++i)
    require(spec.n_grid[i - 1] < spec.n_grid[i], "n_grid must be strictly ascending", "/n_grid");
  for (std::size_t n : spec.n_grid) {
    require(n >= 2, "grid n must be at least 2", "/n_grid");
    const std::size_t p = spec.p_rule.at(n);
    const std::size_t q = spec.q_rule.at(n);
    require(p < n, "p_rule must give p < n at every grid point", "/p_rule");
    require(q <= p, "q_rule must give q <= p at every grid point", "/q_rule");
  }
  if (spec.p_rule.kind == GrowthRule::Kind::power)
    require(spec.p_rule.exponent > 0.0 && spec.p_rule.exponent < 1.0,
            "p_rule exponent must lie in (0, 1)", "/p_rule");
  require(spec.epsilon > 0.0, "epsilon must be positive", "/epsilon");
  require(spec.rho > 0.0, "rho must be positive", "/rho");
  require(spec.C > 0.0, "C must be positive", "/C");
  require(!spec.families.empty(), "families must be non-empty", "/families");
  require(spec.replicates >= 1, "replicates must be positive", "/replicates");
  require(spec.sigma2 > 0.0, "sigma2 must be positive", "/sigma2");
  require(!spec.beta_nonzero.empty(), "beta_nonzero must be non-empty", "/beta_nonzero");
  for (const auto& [fam, v] : spec.fixed_hyper)
    require(v > 0.0, "fixed_hyper values must be positive", "/fixed_hyper");
  validate(spec.sampler);
}

namespace detail {

inline std::vector<double> cycled_active_values(const SweepSpec& spec, std::size_t q) {
  std::vector<double> out(q);
  for (std::size_t k = 0; k < q; ++k) out[k] = spec.beta_nonzero[k % spec.beta_nonzero.size()];
  return out;
}

inline double sup_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

inline double cell_hyper(const SweepSpec& spec, Family fam, std::size_t n, std::size_t p) {
  if (auto it = spec.fixed_hyper.find(fam); it != spec.fixed_hyper.end()) return it->second;
  return schedule_hyper({fam, spec.C, spec.rho}, n, p);
}

// Runs task(i) for i in [0, count) on `jobs` threads. The first exception
// is rethrown after all workers finish.
inline void parallel_for(std::size_t count, unsigned jobs,
                         const std::function<void(std::size_t)>& task) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

struct Cell {
  std::size_t index;
  std::size_t n, p, q;
  Family family;
};

inline std::vector<Cell> make_cells(const SweepSpec& spec) {
  std::vector<Cell> cells;
  for (std::size_t n : spec.n_grid)
    for (Family f : spec.families)
      cells.push_back({cells.size(), n, spec.p_rule.at(n), spec.q_rule.at(n), f});
  return cells;
}

inline SweepRow row_header(const Cell& c) {
  SweepRow row;
  row.n = c.n;
  row.p = c.p;
  row.q = c.q;
  row.family = std::string(family_name(c.family));
  return row;
}

inline void attach_bound(SweepRow& row, const SweepSpec& spec, const Cell& c,
                         const PriorSpec& prior, double Delta, double d, bool decompose) {
  const auto active = cycled_active_values(spec, c.q);
  ConcentrationQuery query;
  query.n = c.n;
  query.p = c.p;
  query.q = c.q;
  query.rho = spec.rho;
  query.Delta = Delta;
  query.sup_beta0 = sup_abs(active);
  query.prior = prior;
  query.d = d;
  const auto report = family_lower_bound(query);
  row.neg_log_bound = report.neg_log_bound;
  row.bound_satisfied = report.satisfied;
  if (report.vacuous) row.status = "vacuous";
  if (decompose) row.dominating_term = neg_log_decomposition(query, spec.C).dominating;
}

inline double median_of(const std::vector<double>& v) { return quantile(v, 0.5); }

}  // namespace detail

inline std::vector<SweepRow> run_consistency_sweep(const SweepSpec& spec) {
  validate(spec);
  const auto cells = detail::make_cells(spec);
  std::vector<SweepRow> rows(cells.size());
  detail::parallel_for(cells.size(), spec.jobs, [&](std::size_t i) {
    const auto& c = cells[i];
    SweepRow row = detail::row_header(c);
    const std::uint64_t cell_seed = derive_seed(spec.base_seed, c.index);
    row.seeds_used = std::to_string(cell_seed);
    try {
      const double hyper = detail::cell_hyper(spec, c.family, c.n, c.p);
      row.hyper_value = hyper;
      const PriorSpec prior = make_prior(c.family, hyper, spec.shape);
      const auto active = detail::cycled_active_values(spec, c.q);
      std::vector<double> exclusion;
      for (std::size_t r = 0; r < spec.replicates; ++r) {
        ModelConfig cfg;
        cfg.n = c.n;
        cfg.p = c.p;
        cfg.q = c.q;
        cfg.sigma2 = spec.sigma2;
        cfg.beta_nonzero = active;
        cfg.seed = derive_seed(cell_seed, 2 * r);
        const Dataset ds = generate_dataset(cfg);
        SamplerConfig sc = spec.sampler;
        sc.seed = derive_seed(cell_seed, 2 * r + 1);
        const auto samples = sample_posterior(ds, spec.sigma2, prior, sc);
        exclusion.push_back(ball_exclusion_probability(samples, ds.beta0, spec.epsilon));
      }
      row.ball_exclusion_median = detail::median_of(exclusion);
      row.ball_exclusion_iqr = quantile(exclusion, 0.75) - quantile(exclusion, 0.25);
      if (has_finite_second_moment(prior)) {
        detail::attach_bound(row, spec, c, prior, spec.Delta, spec.d, false);
      }
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    rows[i] = std::move(row);
  });
  return rows;
}

inline std::vector<SweepRow> run_concentration_sweep(const SweepSpec& spec, double Delta,
                                                     double d) {
  validate(spec);
  const auto ranges = admissible_ranges(spec.epsilon, spec.lambda_min, spec.lambda_max,
                                        spec.sigma2);
  detail::require(ranges.admits(Delta, d),
                  "(Delta, d) outside the admissible ranges: need 0 < Delta < " +
                      std::to_string(ranges.Delta_max) + " and 0 < d < d_max(Delta) = " +
                      std::to_string(ranges.d_max(Delta)),
                  "/Delta");
  const auto cells = detail::make_cells(spec);
  std::vector<SweepRow> rows(cells.size());
  detail::parallel_for(cells.size(), spec.jobs, [&](std::size_t i) {
    const auto& c = cells[i];
    SweepRow row = detail::row_header(c);
    row.seeds_used = "";
    try {
      const double hyper = detail::cell_hyper(spec, c.family, c.n, c.p);
      row.hyper_value = hyper;
      const PriorSpec prior = make_prior(c.family, hyper, spec.shape);
      const bool scheduled = !spec.fixed_hyper.contains(c.family) && c.family != Family::gaussian;
      detail::attach_bound(row, spec, c, prior, Delta, d, scheduled);
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    rows[i] = std::move(row);
  });
  return rows;
}

inline std::vector<SweepRow> run_lemma1_sweep(const SweepSpec& spec) {
  validate(spec);
  std::vector<SweepRow> rows(spec.n_grid.size());
  detail::parallel_for(spec.n_grid.size(), spec.jobs, [&](std::size_t i) {
    const std::size_t n = spec.n_grid[i];
    SweepRow row;
    row.n = n;
    row.p = spec.p_rule.at(n);
    row.q = spec.q_rule.at(n);
    row.family = "ols";
    const std::uint64_t cell_seed = derive_seed(spec.base_seed, i);
    row.seeds_used = std::to_string(cell_seed);
    if (n < 8 * row.p) {
      row.status = "skipped: n < 8p";
      rows[i] = std::move(row);
      return;
    }
    try {
      ModelConfig cfg;
      cfg.n = n;
      cfg.p = row.p;
      cfg.q = row.q;
      cfg.sigma2 = spec.sigma2;
      cfg.beta_nonzero = detail::cycled_active_values(spec, row.q);
      cfg.seed = derive_seed(cell_seed, 0);
      const auto est = type1_error_mc(cfg, spec.epsilon, spec.lemma1_trials, derive_seed(cell_seed, 1));
      row.lemma1_type1 = est.rate;
      row.lemma1_bound = est.bound;
      if (!est.in_validity_region) row.status = "outside chi-square validity region";
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    rows[i] = std::move(row);
  });
  return rows;
}

}  // namespace shrinklab
