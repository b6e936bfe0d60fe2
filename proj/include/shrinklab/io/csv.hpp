#pragma once

// Tabular output. Reals are written with %.17g so that a write-read-write
// cycle reproduces the file byte for byte; absent values are empty cells.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "shrinklab/concentration.hpp"
#include "shrinklab/errors.hpp"
#include "shrinklab/experiments.hpp"
#include "shrinklab/posterior.hpp"
#include "shrinklab/testfn.hpp"

namespace shrinklab::io {

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string quote_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_record(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << quote_cell(cells[i]);
  }
  os << '\n';
}

// One RFC 4180 record; returns false at end of input.
inline bool read_record(std::istream& is, std::vector<std::string>& cells) {
  cells.clear();
  if (is.peek() == std::char_traits<char>::eof()) return false;
  std::string cell;
  bool quoted = false;
  char c;
  while (is.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (is.peek() == '"') {
          is.get(c);
          cell += '"';
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (quoted) throw ValidationError("unterminated quoted CSV cell");
  cells.push_back(std::move(cell));
  return true;
}

namespace detail {

inline std::string opt_real(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string();
}

inline std::string opt_bool(const std::optional<bool>& v) {
  return v ? (*v ? "true" : "false") : std::string();
}

inline double parse_real(const std::string& s, const std::string& column) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ValidationError("column '" + column + "' holds a non-numeric value '" + s + "'",
                          "/" + column);
  return v;
}

inline std::size_t parse_size(const std::string& s, const std::string& column) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || s[0] == '-')
    throw ValidationError("column '" + column + "' holds a non-integer value '" + s + "'",
                          "/" + column);
  return static_cast<std::size_t>(v);
}

inline std::optional<double> parse_opt_real(const std::string& s, const std::string& column) {
  if (s.empty()) return std::nullopt;
  return parse_real(s, column);
}

inline std::optional<bool> parse_opt_bool(const std::string& s, const std::string& column) {
  if (s.empty()) return std::nullopt;
  if (s == "true") return true;
  if (s == "false") return false;
  throw ValidationError("column '" + column + "' must be true or false", "/" + column);
}

}  // namespace detail

// ---- sweep rows ----

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{
      "n",          "p",           "q",           "family",          "hyper_value",
      "ball_exclusion_median",     "ball_exclusion_iqr",             "neg_log_bound",
      "bound_satisfied",           "lemma1_type1", "lemma1_bound",   "seeds_used",
      "dominating_term",           "status"};
  return cols;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  using namespace detail;
  write_record(os, sweep_columns());
  for (const auto& r : rows) {
    write_record(os, {std::to_string(r.n), std::to_string(r.p), std::to_string(r.q), r.family,
                      opt_real(r.hyper_value), opt_real(r.ball_exclusion_median),
                      opt_real(r.ball_exclusion_iqr), opt_real(r.neg_log_bound),
                      opt_bool(r.bound_satisfied), opt_real(r.lemma1_type1),
                      opt_real(r.lemma1_bound), r.seeds_used, r.dominating_term, r.status});
  }
}

inline std::vector<SweepRow> read_sweep_csv(std::istream& is) {
  using namespace detail;
  std::vector<std::string> cells;
  if (!read_record(is, cells)) throw ValidationError("empty sweep CSV");
  if (cells != sweep_columns()) throw ValidationError("sweep CSV header does not match the schema");
  const auto& cols = sweep_columns();
  std::vector<SweepRow> rows;
  while (read_record(is, cells)) {
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (cells.size() != cols.size())
      throw ValidationError("sweep CSV row " + std::to_string(rows.size() + 1) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(cols.size()));
    SweepRow r;
    r.n = parse_size(cells[0], cols[0]);
    r.p = parse_size(cells[1], cols[1]);
    r.q = parse_size(cells[2], cols[2]);
    r.family = cells[3];
    r.hyper_value = parse_opt_real(cells[4], cols[4]);
    r.ball_exclusion_median = parse_opt_real(cells[5], cols[5]);
    r.ball_exclusion_iqr = parse_opt_real(cells[6], cols[6]);
    r.neg_log_bound = parse_opt_real(cells[7], cols[7]);
    r.bound_satisfied = parse_opt_bool(cells[8], cols[8]);
    r.lemma1_type1 = parse_opt_real(cells[9], cols[9]);
    r.lemma1_bound = parse_opt_real(cells[10], cols[10]);
    r.seeds_used = cells[11];
    r.dominating_term = cells[12];
    r.status = cells[13];
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- bound reports ----

struct BoundCsvRow {
  std::string family;
  std::size_t n = 0, p = 0, q = 0;
  double rho = 0.0, C = 0.0, Delta = 0.0;
  std::optional<double> d;
  BoundReport report;
  std::string dominating_term;
};

inline void write_bound_csv(std::ostream& os, const std::vector<BoundCsvRow>& rows) {
  using namespace detail;
  write_record(os, {"family", "n", "p", "q", "rho", "C", "Delta", "d", "lower_bound",
                    "neg_log_bound", "satisfied", "dominating_term"});
  for (const auto& r : rows)
    write_record(os, {r.family, std::to_string(r.n), std::to_string(r.p), std::to_string(r.q),
                      format_real(r.rho), format_real(r.C), format_real(r.Delta), opt_real(r.d),
                      format_real(r.report.lower_bound), format_real(r.report.neg_log_bound),
                      r.report.satisfied ? "true" : "false", r.dominating_term});
}

// ---- test-function error rates ----

struct TestfnCsvRow {
  std::size_t n = 0, p = 0;
  double epsilon = 0.0;
  double type1_rate = 0.0;
  std::optional<double> type2_max_rate;
  double bound = 1.0;
  std::size_t n_trials = 0;
  std::uint64_t seed = 0;
};

inline void write_testfn_csv(std::ostream& os, const std::vector<TestfnCsvRow>& rows) {
  using namespace detail;
  write_record(os, {"n", "p", "epsilon", "type1_rate", "type2_max_rate", "bound", "n_trials",
                    "seed"});
  for (const auto& r : rows)
    write_record(os, {std::to_string(r.n), std::to_string(r.p), format_real(r.epsilon),
                      format_real(r.type1_rate), opt_real(r.type2_max_rate),
                      format_real(r.bound), std::to_string(r.n_trials), std::to_string(r.seed)});
}

// ---- matrices and draws ----

inline void write_matrix_csv(std::ostream& os, const MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_real(m(i, j));
    }
    os << '\n';
  }
}

inline MatrixXd read_matrix_csv(std::istream& is, const std::string& what = "matrix") {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> cells;
  while (read_record(is, cells)) {
    if (cells.size() == 1 && cells[0].empty()) continue;
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(detail::parse_real(c, what));
    if (!rows.empty() && row.size() != rows[0].size())
      throw ValidationError(what + " has ragged rows");
    rows.push_back(std::move(row));
  }
  MatrixXd m(static_cast<Eigen::Index>(rows.size()),
             rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

inline void write_draws_csv(std::ostream& os, const PosteriorSamples& s) {
  std::vector<std::string> header;
  for (Eigen::Index j = 0; j < s.draws.cols(); ++j) header.push_back("beta_" + std::to_string(j));
  write_record(os, header);
  write_matrix_csv(os, s.draws);
}

}  // namespace shrinklab::io
