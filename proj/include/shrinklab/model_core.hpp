#pragma once

// Sparse linear-model instances y = X beta0 + eps, eps ~ N(0, sigma2 I),
// least-squares estimation, design spectra and the growth-rate assumptions
// (A1)-(A5) as finite-grid predicates.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "shrinklab/errors.hpp"
#include "shrinklab/rng.hpp"

namespace shrinklab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct IidGaussianDesign {};

struct FixedDesign {
  MatrixXd matrix;
};

using DesignKind = std::variant<IidGaussianDesign, FixedDesign>;

struct ModelConfig {
  std::size_t n = 1;
  std::size_t p = 1;
  std::size_t q = 0;
  double sigma2 = 1.0;
  std::vector<double> beta_nonzero;
  DesignKind design = IidGaussianDesign{};
  std::uint64_t seed = 0;
  // Explicit active-set placement; the first q coordinates when absent.
  std::optional<std::vector<std::size_t>> active_indices;
};

struct Dataset {
  MatrixXd X;
  VectorXd y;
  VectorXd beta0;
  std::vector<std::size_t> active_set;

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
};

struct DesignSummary {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double lambda_min_scaled = 0.0;
  double lambda_max_scaled = 0.0;
};

inline void validate(const ModelConfig& cfg) {
  using detail::require;
  require(cfg.n >= 1, "n must be positive", "/n");
  require(cfg.p >= 1, "p must be positive", "/p");
  require(cfg.q <= cfg.p, "q must not exceed p", "/q");
  require(cfg.sigma2 > 0.0 && std::isfinite(cfg.sigma2), "sigma2 must be positive", "/sigma2");
  require(cfg.beta_nonzero.size() == cfg.q, "beta_nonzero must have length q", "/beta_nonzero");
  for (double b : cfg.beta_nonzero) {
    require(std::isfinite(b), "beta_nonzero entries must be finite", "/beta_nonzero");
    require(b != 0.0, "beta_nonzero entries must be nonzero", "/beta_nonzero");
  }
  if (const auto* fixed = std::get_if<FixedDesign>(&cfg.design)) {
    require(static_cast<std::size_t>(fixed->matrix.rows()) == cfg.n &&
                static_cast<std::size_t>(fixed->matrix.cols()) == cfg.p,
            "fixed design matrix must have shape n x p", "/design/matrix");
  }
  if (cfg.active_indices) {
    const auto& idx = *cfg.active_indices;
    require(idx.size() == cfg.q, "active_indices must have length q", "/active_indices");
    std::vector<std::size_t> sorted(idx);
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
            "active_indices must be distinct", "/active_indices");
    require(sorted.empty() || sorted.back() < cfg.p, "active_indices out of range",
            "/active_indices");
  }
}

// Draw order is fixed: X row by row, then the noise vector. Changing it
// changes every seeded fixture.
inline Dataset generate_dataset(const ModelConfig& cfg) {
  validate(cfg);
  Rng rng = make_rng(cfg.seed);
  std::normal_distribution<double> std_normal(0.0, 1.0);

  Dataset ds;
  if (const auto* fixed = std::get_if<FixedDesign>(&cfg.design)) {
    ds.X = fixed->matrix;
  } else {
    ds.X.resize(static_cast<Eigen::Index>(cfg.n), static_cast<Eigen::Index>(cfg.p));
    for (Eigen::Index i = 0; i < ds.X.rows(); ++i)
      for (Eigen::Index j = 0; j < ds.X.cols(); ++j) ds.X(i, j) = std_normal(rng);
  }

  if (cfg.active_indices) {
    ds.active_set = *cfg.active_indices;
  } else {
    ds.active_set.resize(cfg.q);
    for (std::size_t k = 0; k < cfg.q; ++k) ds.active_set[k] = k;
  }
  ds.beta0 = VectorXd::Zero(static_cast<Eigen::Index>(cfg.p));
  for (std::size_t k = 0; k < cfg.q; ++k)
    ds.beta0(static_cast<Eigen::Index>(ds.active_set[k])) = cfg.beta_nonzero[k];
  std::sort(ds.active_set.begin(), ds.active_set.end());

  const double sigma = std::sqrt(cfg.sigma2);
  VectorXd eps(static_cast<Eigen::Index>(cfg.n));
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = sigma * std_normal(rng);
  ds.y = ds.X * ds.beta0 + eps;
  return ds;
}

// Reusable least-squares factorization of a fixed design. Rank deficiency
// is a hard error; there is no pseudo-inverse fallback.
class OlsSolver {
 public:
  explicit OlsSolver(const MatrixXd& X) : qr_(X) {
    if (X.rows() < X.cols())
      throw SingularDesignError("design has fewer rows than columns");
    if (qr_.rank() < X.cols())
      throw SingularDesignError("design matrix is rank deficient (rank " +
                                std::to_string(qr_.rank()) + " < " +
                                std::to_string(X.cols()) + ")");
  }

  VectorXd solve(const VectorXd& y) const { return qr_.solve(y); }

 private:
  Eigen::ColPivHouseholderQR<MatrixXd> qr_;
};

inline VectorXd ols_estimate(const MatrixXd& X, const VectorXd& y) {
  detail::require(X.rows() == y.size(), "X and y row counts differ");
  return OlsSolver(X).solve(y);
}

inline DesignSummary design_summary(const MatrixXd& X) {
  detail::require(X.rows() >= 1 && X.cols() >= 1, "design must be non-empty");
  VectorXd sv;
  if (X.rows() > 2 * X.cols()) {
    // Singular values of X equal those of R in X = QR.
    Eigen::HouseholderQR<MatrixXd> qr(X);
    MatrixXd R = qr.matrixQR().topRows(X.cols()).triangularView<Eigen::Upper>();
    sv = Eigen::JacobiSVD<MatrixXd>(R).singularValues();
  } else {
    sv = Eigen::JacobiSVD<MatrixXd>(X).singularValues();
  }
  DesignSummary s;
  s.lambda_max = sv(0);
  // Fewer rows than columns: the smallest singular value of the map is 0.
  s.lambda_min = X.rows() < X.cols() ? 0.0 : sv(sv.size() - 1);
  const double root_n = std::sqrt(static_cast<double>(X.rows()));
  s.lambda_min_scaled = s.lambda_min / root_n;
  s.lambda_max_scaled = s.lambda_max / root_n;
  return s;
}

struct AssumptionThresholds {
  double a1 = 0.5;
  double a4 = 0.5;
  double a5 = 0.5;
  // A2 window: scaled singular values must stay inside [a2_floor, a2_ceiling].
  double a2_floor = 0.25;
  double a2_ceiling = 4.0;
  // A3: sup |beta0| bound.
  double a3 = 1e6;
  bool compute_spectrum = true;
};

struct AssumptionRow {
  std::size_t n = 0, p = 0, q = 0;
  double a1_ratio = 0.0;
  double a4_ratio = 0.0;
  double a5_ratio = 0.0;
  std::optional<std::pair<double, double>> a2_window;
  double sup_beta0 = 0.0;
};

struct AssumptionReport {
  double rho = 0.0;
  std::vector<AssumptionRow> rows;
  bool a1 = false, a2 = false, a3 = false, a4 = false, a5 = false;
};

namespace detail {

// Strict decrease over the last half of the grid and final value below the
// threshold: the finite-grid reading of a little-o condition.
inline bool decays_below(std::span<const double> values, double threshold) {
  if (values.empty()) return false;
  const std::size_t start = (values.size() - 1) / 2;
  for (std::size_t i = start + 1; i < values.size(); ++i)
    if (!(values[i] < values[i - 1])) return false;
  return values.back() < threshold;
}

}  // namespace detail

inline AssumptionReport check_assumptions(std::span<const ModelConfig> grid, double rho,
                                          const AssumptionThresholds& thr = {}) {
  using detail::require;
  require(grid.size() >= 2, "assumption grid needs at least two entries", "/configs");
  require(rho > 0.0 && rho < 2.0, "rho must lie in (0, 2)", "/rho");
  for (std::size_t i = 1; i < grid.size(); ++i)
    require(grid[i - 1].n < grid[i].n, "grid must be sorted by strictly increasing n",
            "/configs");

  AssumptionReport rep;
  rep.rho = rho;
  std::vector<double> a1, a4, a5;
  bool a2_ok = thr.compute_spectrum;
  bool a3_ok = true;
  for (const auto& cfg : grid) {
    validate(cfg);
    AssumptionRow row;
    row.n = cfg.n;
    row.p = cfg.p;
    row.q = cfg.q;
    const double n = static_cast<double>(cfg.n);
    const double p = static_cast<double>(cfg.p);
    const double q = static_cast<double>(cfg.q);
    row.a1_ratio = p / n;
    row.a4_ratio = q * std::sqrt(p) * std::log(n) / std::pow(n, 1.0 - rho / 2.0);
    row.a5_ratio = q * std::log(n) / n;
    for (double b : cfg.beta_nonzero) row.sup_beta0 = std::max(row.sup_beta0, std::abs(b));
    a3_ok = a3_ok && row.sup_beta0 <= thr.a3;
    if (thr.compute_spectrum) {
      const auto ds = generate_dataset(cfg);
      const auto s = design_summary(ds.X);
      row.a2_window = std::make_pair(s.lambda_min_scaled, s.lambda_max_scaled);
      a2_ok = a2_ok && s.lambda_min_scaled >= thr.a2_floor &&
              s.lambda_max_scaled <= thr.a2_ceiling;
    }
    a1.push_back(row.a1_ratio);
    a4.push_back(row.a4_ratio);
    a5.push_back(row.a5_ratio);
    rep.rows.push_back(std::move(row));
  }
  rep.a1 = detail::decays_below(a1, thr.a1);
  rep.a2 = a2_ok;
  rep.a3 = a3_ok;
  rep.a4 = detail::decays_below(a4, thr.a4);
  rep.a5 = detail::decays_below(a5, thr.a5);
  return rep;
}

}  // namespace shrinklab
