#pragma once

// JSON converters for the structured types. Parsers take the JSON pointer
// of the value being read so that every ValidationError names the
// offending field.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "shrinklab/concentration.hpp"
#include "shrinklab/errors.hpp"
#include "shrinklab/experiments.hpp"
#include "shrinklab/model_core.hpp"
#include "shrinklab/posterior.hpp"
#include "shrinklab/priors.hpp"

namespace shrinklab::io {

using nlohmann::json;

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
  return path + "/" + key;
}

inline const json& member(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ValidationError("expected an object", path.empty() ? "/" : path);
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError("missing required field '" + key + "'", join(path, key));
  return *it;
}

inline double as_double(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
  }
  throw ValidationError("expected a number", path);
}

inline std::uint64_t as_u64(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ValidationError("expected a non-negative integer", path);
}

inline std::size_t as_size(const json& v, const std::string& path) {
  return static_cast<std::size_t>(as_u64(v, path));
}

inline bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ValidationError("expected a boolean", path);
  return v.get<bool>();
}

inline std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ValidationError("expected a string", path);
  return v.get<std::string>();
}

inline std::vector<double> as_doubles(const json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError("expected an array of numbers", path);
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_double(v[i], path + "/" + std::to_string(i)));
  return out;
}

inline double num(const json& j, const std::string& key, const std::string& path) {
  return as_double(member(j, key, path), join(path, key));
}

inline double num_or(const json& j, const std::string& key, const std::string& path,
                     double fallback) {
  return j.contains(key) ? num(j, key, path) : fallback;
}

inline std::size_t size_or(const json& j, const std::string& key, const std::string& path,
                           std::size_t fallback) {
  return j.contains(key) ? as_size(j.at(key), join(path, key)) : fallback;
}

// Non-finite doubles are written as strings so the output stays valid JSON.
inline json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline json matrix_rows(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

// Parses a document, mapping syntax errors to ValidationError.
inline json parse_text(const std::string& text, const std::string& what = "input") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what + " is not valid JSON: " + e.what(), "/");
  }
}

// ---- priors ----

inline PriorSpec prior_from_json(const json& j, const std::string& path = "") {
  using namespace detail;
  const Family fam = [&] {
    const auto name = as_string(member(j, "family", path), join(path, "family"));
    try {
      return parse_family(name);
    } catch (const ValidationError& e) {
      throw ValidationError(e.what(), join(path, "family"));
    }
  }();
  PriorSpec prior;
  switch (fam) {
    case Family::laplace: prior = Laplace{num(j, "s", path)}; break;
    case Family::student_t: prior = StudentT{num(j, "s", path), num(j, "dof", path)}; break;
    case Family::gdp: prior = Gdp{num(j, "alpha", path), num(j, "eta", path)}; break;
    case Family::horseshoe_like:
      prior = HorseshoeLike{num(j, "a0", path), num(j, "b0", path), num(j, "xi", path)};
      break;
    case Family::gaussian: prior = GaussianOracle{num(j, "v", path)}; break;
  }
  try {
    validate(prior);
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), path + e.field());
  }
  return prior;
}

inline json to_json(const PriorSpec& prior) {
  return std::visit(overloaded{
                        [](const Laplace& p) { return json{{"family", "laplace"}, {"s", p.s}}; },
                        [](const StudentT& p) {
                          return json{{"family", "student_t"}, {"s", p.s}, {"dof", p.dof}};
                        },
                        [](const Gdp& p) {
                          return json{{"family", "gdp"}, {"alpha", p.alpha}, {"eta", p.eta}};
                        },
                        [](const HorseshoeLike& p) {
                          return json{{"family", "horseshoe_like"},
                                      {"a0", p.a0},
                                      {"b0", p.b0},
                                      {"xi", p.xi}};
                        },
                        [](const GaussianOracle& p) {
                          return json{{"family", "gaussian"}, {"v", p.v}};
                        },
                    },
                    prior);
}

inline ScheduleSpec schedule_from_json(const json& j, const std::string& path = "") {
  using namespace detail;
  ScheduleSpec s;
  try {
    s.family = parse_family(as_string(member(j, "family", path), join(path, "family")));
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), join(path, "family"));
  }
  s.C = num(j, "C", path);
  s.rho = num(j, "rho", path);
  shrinklab::detail::require(s.C > 0.0, "C must be positive", join(path, "C"));
  shrinklab::detail::require(s.rho > 0.0, "rho must be positive", join(path, "rho"));
  return s;
}

inline json to_json(const ScheduleSpec& s) {
  return json{{"family", family_name(s.family)}, {"C", s.C}, {"rho", s.rho}};
}

inline PriorShape shape_from_json(const json& j, const std::string& path) {
  using namespace detail;
  PriorShape s;
  s.dof = num_or(j, "dof", path, s.dof);
  s.alpha = num_or(j, "alpha", path, s.alpha);
  s.a0 = num_or(j, "a0", path, s.a0);
  s.b0 = num_or(j, "b0", path, s.b0);
  return s;
}

inline json to_json(const PriorShape& s) {
  return json{{"dof", s.dof}, {"alpha", s.alpha}, {"a0", s.a0}, {"b0", s.b0}};
}

// ---- model ----

inline ModelConfig model_config_from_json(const json& j, const std::string& path = "") {
  using namespace detail;
  ModelConfig c;
  c.n = as_size(member(j, "n", path), join(path, "n"));
  c.p = as_size(member(j, "p", path), join(path, "p"));
  c.q = as_size(member(j, "q", path), join(path, "q"));
  c.sigma2 = num_or(j, "sigma2", path, 1.0);
  c.beta_nonzero = as_doubles(member(j, "beta_nonzero", path), join(path, "beta_nonzero"));
  c.seed = j.contains("seed") ? as_u64(j.at("seed"), join(path, "seed")) : 0;
  if (j.contains("active_indices")) {
    const auto& a = j.at("active_indices");
    const auto apath = join(path, "active_indices");
    if (!a.is_array()) throw ValidationError("expected an array of indices", apath);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < a.size(); ++i)
      idx.push_back(as_size(a[i], apath + "/" + std::to_string(i)));
    c.active_indices = idx;
  }
  if (j.contains("design")) {
    const auto& d = j.at("design");
    const auto dpath = join(path, "design");
    const auto kind = as_string(member(d, "kind", dpath), join(dpath, "kind"));
    if (kind == "iid_gaussian") {
      c.design = IidGaussianDesign{};
    } else if (kind == "fixed") {
      const auto& m = member(d, "matrix", dpath);
      const auto mpath = join(dpath, "matrix");
      if (!m.is_array()) throw ValidationError("expected an array of rows", mpath);
      MatrixXd X(static_cast<Eigen::Index>(m.size()),
                 m.empty() ? 0 : static_cast<Eigen::Index>(m[0].size()));
      for (std::size_t i = 0; i < m.size(); ++i) {
        const auto row = as_doubles(m[i], mpath + "/" + std::to_string(i));
        if (static_cast<Eigen::Index>(row.size()) != X.cols())
          throw ValidationError("ragged design matrix", mpath + "/" + std::to_string(i));
        for (std::size_t k = 0; k < row.size(); ++k)
          X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
      }
      c.design = FixedDesign{X};
    } else {
      throw ValidationError("design kind must be 'iid_gaussian' or 'fixed'", join(dpath, "kind"));
    }
  }
  try {
    validate(c);
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), path + e.field());
  }
  return c;
}

inline json to_json(const ModelConfig& c) {
  json j{{"n", c.n},           {"p", c.p},
         {"q", c.q},           {"sigma2", c.sigma2},
         {"beta_nonzero", c.beta_nonzero}, {"seed", c.seed}};
  if (c.active_indices) j["active_indices"] = *c.active_indices;
  if (const auto* f = std::get_if<FixedDesign>(&c.design))
    j["design"] = json{{"kind", "fixed"}, {"matrix", detail::matrix_rows(f->matrix)}};
  else
    j["design"] = json{{"kind", "iid_gaussian"}};
  return j;
}

inline AssumptionThresholds thresholds_from_json(const json& j, const std::string& path) {
  using namespace detail;
  AssumptionThresholds t;
  t.a1 = num_or(j, "a1", path, t.a1);
  t.a4 = num_or(j, "a4", path, t.a4);
  t.a5 = num_or(j, "a5", path, t.a5);
  t.a2_floor = num_or(j, "a2_floor", path, t.a2_floor);
  t.a2_ceiling = num_or(j, "a2_ceiling", path, t.a2_ceiling);
  t.a3 = num_or(j, "a3", path, t.a3);
  if (j.contains("compute_spectrum"))
    t.compute_spectrum = as_bool(j.at("compute_spectrum"), join(path, "compute_spectrum"));
  return t;
}

inline json to_json(const AssumptionReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json jr{{"n", row.n},
            {"p", row.p},
            {"q", row.q},
            {"a1_ratio", detail::number(row.a1_ratio)},
            {"a4_ratio", detail::number(row.a4_ratio)},
            {"a5_ratio", detail::number(row.a5_ratio)},
            {"sup_beta0", detail::number(row.sup_beta0)}};
    if (row.a2_window)
      jr["a2_window"] = {detail::number(row.a2_window->first),
                         detail::number(row.a2_window->second)};
    else
      jr["a2_window"] = nullptr;
    rows.push_back(jr);
  }
  return json{{"rho", r.rho}, {"a1", r.a1}, {"a2", r.a2}, {"a3", r.a3},
              {"a4", r.a4},   {"a5", r.a5}, {"rows", rows}};
}

// ---- concentration ----

inline ConcentrationQuery query_from_json(const json& j, const std::string& path = "") {
  using namespace detail;
  ConcentrationQuery q;
  q.n = as_size(member(j, "n", path), join(path, "n"));
  q.p = as_size(member(j, "p", path), join(path, "p"));
  q.q = as_size(member(j, "q", path), join(path, "q"));
  q.rho = num(j, "rho", path);
  q.Delta = num(j, "Delta", path);
  q.sup_beta0 = num(j, "sup_beta0", path);
  q.prior = prior_from_json(member(j, "prior", path), join(path, "prior"));
  if (j.contains("d") && !j.at("d").is_null()) q.d = num(j, "d", path);
  if (j.contains("active_values"))
    q.active_values = as_doubles(j.at("active_values"), join(path, "active_values"));
  try {
    shrinklab::detail::validate(q);
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), path + e.field());
  }
  return q;
}

inline json to_json(const ConcentrationQuery& q) {
  json j{{"n", q.n},         {"p", q.p},         {"q", q.q},
         {"rho", q.rho},     {"Delta", q.Delta}, {"sup_beta0", q.sup_beta0},
         {"prior", to_json(q.prior)}};
  if (q.d) j["d"] = *q.d;
  if (q.active_values) j["active_values"] = *q.active_values;
  return j;
}

inline json to_json(const BoundReport& r) {
  return json{{"lower_bound", detail::number(r.lower_bound)},
              {"neg_log_bound", detail::number(r.neg_log_bound)},
              {"dn", r.dn ? json(detail::number(*r.dn)) : json(nullptr)},
              {"satisfied", r.satisfied},
              {"markov_factor", detail::number(r.markov_factor)},
              {"active_factor_log", detail::number(r.active_factor_log)},
              {"vacuous", r.vacuous}};
}

inline BoundReport bound_report_from_json(const json& j, const std::string& path = "") {
  using namespace detail;
  BoundReport r;
  r.lower_bound = num(j, "lower_bound", path);
  r.neg_log_bound = num(j, "neg_log_bound", path);
  if (j.contains("dn") && !j.at("dn").is_null()) r.dn = num(j, "dn", path);
  r.satisfied = as_bool(member(j, "satisfied", path), join(path, "satisfied"));
  r.markov_factor = num(j, "markov_factor", path);
  r.active_factor_log = num(j, "active_factor_log", path);
  r.vacuous = as_bool(member(j, "vacuous", path), join(path, "vacuous"));
  return r;
}

inline json to_json(const NegLogDecomposition& d) {
  json terms = json::array();
  for (const auto& t : d.terms) terms.push_back({{"name", t.name}, {"value", detail::number(t.value)}});
  return json{{"terms", terms},
              {"total", detail::number(d.total)},
              {"family_neg_log", detail::number(d.family_neg_log)},
              {"identity_holds", d.identity_holds},
              {"dominating", d.dominating},
              {"expected_dominating", d.expected_dominating}};
}

// ---- sampler ----

inline SamplerConfig sampler_from_json(const json& j, const std::string& path = "") {
  using namespace detail;
  if (!j.is_object()) throw ValidationError("expected an object", path.empty() ? "/" : path);
  SamplerConfig c;
  c.iterations = size_or(j, "iterations", path, c.iterations);
  c.burn_in = size_or(j, "burn_in", path, c.burn_in);
  c.proposal_scale_init = num_or(j, "proposal_scale_init", path, c.proposal_scale_init);
  if (j.contains("adapt")) c.adapt = as_bool(j.at("adapt"), join(path, "adapt"));
  if (j.contains("seed")) c.seed = as_u64(j.at("seed"), join(path, "seed"));
  if (j.contains("initial")) {
    const auto& init = j.at("initial");
    const auto ipath = join(path, "initial");
    if (init.is_string()) {
      const auto s = init.get<std::string>();
      if (s == "ols")
        c.initial = InitOls{};
      else if (s == "zeros")
        c.initial = InitZeros{};
      else
        throw ValidationError("initial must be 'ols', 'zeros' or an array", ipath);
    } else {
      const auto v = as_doubles(init, ipath);
      c.initial = VectorXd(Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
  }
  try {
    validate(c);
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), path + e.field());
  }
  return c;
}

inline json to_json(const SamplerConfig& c) {
  json j{{"iterations", c.iterations},
         {"burn_in", c.burn_in},
         {"proposal_scale_init", c.proposal_scale_init},
         {"adapt", c.adapt},
         {"seed", c.seed}};
  std::visit(overloaded{
                 [&](const InitOls&) { j["initial"] = "ols"; },
                 [&](const InitZeros&) { j["initial"] = "zeros"; },
                 [&](const VectorXd& v) {
                   j["initial"] = std::vector<double>(v.data(), v.data() + v.size());
                 },
             },
             c.initial);
  return j;
}

// ---- sweeps ----

inline GrowthRule growth_rule_from_json(const json& j, const std::string& path) {
  using namespace detail;
  const auto kind = as_string(member(j, "kind", path), join(path, "kind"));
  if (kind == "fixed") return GrowthRule::fixed(as_size(member(j, "value", path), join(path, "value")));
  if (kind == "power") return GrowthRule::power(num(j, "exponent", path));
  throw ValidationError("rule kind must be 'fixed' or 'power'", join(path, "kind"));
}

inline json to_json(const GrowthRule& r) {
  if (r.kind == GrowthRule::Kind::fixed) return json{{"kind", "fixed"}, {"value", r.value}};
  return json{{"kind", "power"}, {"exponent", r.exponent}};
}

inline SweepSpec sweep_spec_from_json(const json& j, const std::string& path = "") {
  using namespace detail;
  if (!j.is_object()) throw ValidationError("expected an object", path.empty() ? "/" : path);
  SweepSpec s;
  {
    const auto& g = member(j, "n_grid", path);
    const auto gpath = join(path, "n_grid");
    if (!g.is_array()) throw ValidationError("expected an array of integers", gpath);
    s.n_grid.clear();
    for (std::size_t i = 0; i < g.size(); ++i)
      s.n_grid.push_back(as_size(g[i], gpath + "/" + std::to_string(i)));
  }
  s.p_rule = growth_rule_from_json(member(j, "p_rule", path), join(path, "p_rule"));
  s.q_rule = growth_rule_from_json(member(j, "q_rule", path), join(path, "q_rule"));
  s.epsilon = num(j, "epsilon", path);
  s.rho = num(j, "rho", path);
  s.C = num(j, "C", path);
  {
    const auto& f = member(j, "families", path);
    const auto fpath = join(path, "families");
    if (!f.is_array()) throw ValidationError("expected an array of family names", fpath);
    s.families.clear();
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto ip = fpath + "/" + std::to_string(i);
      try {
        s.families.push_back(parse_family(as_string(f[i], ip)));
      } catch (const ValidationError& e) {
        throw ValidationError(e.what(), ip);
      }
    }
  }
  s.replicates = as_size(member(j, "replicates", path), join(path, "replicates"));
  s.sampler = sampler_from_json(member(j, "sampler", path), join(path, "sampler"));
  s.base_seed = j.contains("base_seed") ? as_u64(j.at("base_seed"), join(path, "base_seed")) : 0;
  s.sigma2 = num_or(j, "sigma2", path, s.sigma2);
  if (j.contains("beta_nonzero"))
    s.beta_nonzero = as_doubles(j.at("beta_nonzero"), join(path, "beta_nonzero"));
  if (j.contains("shape")) s.shape = shape_from_json(j.at("shape"), join(path, "shape"));
  if (j.contains("fixed_hyper")) {
    const auto& fh = j.at("fixed_hyper");
    const auto fpath = join(path, "fixed_hyper");
    if (!fh.is_object()) throw ValidationError("expected an object", fpath);
    for (const auto& [name, v] : fh.items()) {
      const auto ip = join(fpath, name);
      Family fam;
      try {
        fam = parse_family(name);
      } catch (const ValidationError& e) {
        throw ValidationError(e.what(), ip);
      }
      s.fixed_hyper[fam] = as_double(v, ip);
    }
  }
  s.Delta = num_or(j, "Delta", path, s.Delta);
  s.d = num_or(j, "d", path, s.d);
  s.lambda_min = num_or(j, "lambda_min", path, s.lambda_min);
  s.lambda_max = num_or(j, "lambda_max", path, s.lambda_max);
  s.lemma1_trials = size_or(j, "lemma1_trials", path, s.lemma1_trials);
  if (j.contains("jobs")) s.jobs = static_cast<unsigned>(as_size(j.at("jobs"), join(path, "jobs")));
  try {
    validate(s);
  } catch (const ValidationError& e) {
    throw ValidationError(e.what(), path + e.field());
  }
  return s;
}

inline json to_json(const SweepSpec& s) {
  json families = json::array();
  for (Family f : s.families) families.push_back(family_name(f));
  json fixed = json::object();
  for (const auto& [f, v] : s.fixed_hyper) fixed[std::string(family_name(f))] = v;
  return json{{"n_grid", s.n_grid},
              {"p_rule", to_json(s.p_rule)},
              {"q_rule", to_json(s.q_rule)},
              {"epsilon", s.epsilon},
              {"rho", s.rho},
              {"C", s.C},
              {"families", families},
              {"replicates", s.replicates},
              {"sampler", to_json(s.sampler)},
              {"base_seed", s.base_seed},
              {"sigma2", s.sigma2},
              {"beta_nonzero", s.beta_nonzero},
              {"shape", to_json(s.shape)},
              {"fixed_hyper", fixed},
              {"Delta", s.Delta},
              {"d", s.d},
              {"lambda_min", s.lambda_min},
              {"lambda_max", s.lambda_max},
              {"lemma1_trials", s.lemma1_trials},
              {"jobs", s.jobs}};
}

}  // namespace shrinklab::io
