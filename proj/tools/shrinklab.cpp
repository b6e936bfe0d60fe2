// shrinklab command-line tool. Data goes to stdout or --out, logs and
// error objects go to stderr. Exit status: 0 ok, 1 invalid input,
// 2 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "shrinklab/concentration.hpp"
#include "shrinklab/experiments.hpp"
#include "shrinklab/io/csv.hpp"
#include "shrinklab/io/dataset_io.hpp"
#include "shrinklab/io/json.hpp"
#include "shrinklab/model_core.hpp"
#include "shrinklab/posterior.hpp"
#include "shrinklab/priors.hpp"
#include "shrinklab/version.hpp"

namespace {

namespace sl = shrinklab;
namespace io = shrinklab::io;
namespace fs = std::filesystem;
using io::json;

// Accepts either an inline JSON document or a path to one.
json load_json_arg(const std::string& arg, const std::string& what) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '['))
    return io::parse_text(arg, what);
  if (!fs::exists(arg)) throw sl::ValidationError(what + " file '" + arg + "' does not exist");
  return io::parse_text(io::read_file(arg), what);
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

struct Grid {
  double lo, hi;
  std::size_t count;
};

Grid parse_grid(const std::string& s) {
  // lo:hi:count
  const auto a = s.find(':');
  const auto b = s.find(':', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos)
    throw sl::ValidationError("--grid must look like lo:hi:count", "/grid");
  Grid g{};
  try {
    g.lo = std::stod(s.substr(0, a));
    g.hi = std::stod(s.substr(a + 1, b - a - 1));
    g.count = std::stoul(s.substr(b + 1));
  } catch (const std::exception&) {
    throw sl::ValidationError("--grid must look like lo:hi:count", "/grid");
  }
  if (g.count < 1 || !(g.hi >= g.lo))
    throw sl::ValidationError("--grid needs hi >= lo and count >= 1", "/grid");
  return g;
}

json prior_point(const sl::PriorSpec& prior, double beta) {
  return json{{"beta", beta},
              {"density", io::detail::number(sl::density(prior, beta))},
              {"log_density", io::detail::number(sl::log_density(prior, beta))},
              {"cdf", io::detail::number(sl::cdf(prior, beta))}};
}

int run(int argc, char** argv) {
  CLI::App app{"Posterior consistency toolkit for shrinkage priors in linear regression"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version",
                       std::string(sl::version()) + " (" + sl::git_hash() + ")");
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Base seed for all randomness")->default_val(0);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a dataset from a model config");
  std::string gen_config, gen_out;
  gen->add_option("--config", gen_config, "Model config JSON (file or inline)")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // check-assumptions
  auto* chk = app.add_subcommand("check-assumptions", "Check regime assumptions over a grid");
  std::string chk_spec;
  chk->add_option("--spec", chk_spec, "JSON with rho, configs[] and optional thresholds")
      ->required();

  // prior-eval
  auto* pe = app.add_subcommand("prior-eval", "Evaluate a prior density and CDF");
  std::string pe_prior;
  std::optional<double> pe_beta;
  std::string pe_grid;
  pe->add_option("--prior", pe_prior, "Prior JSON (file or inline)")->required();
  auto* beta_opt = pe->add_option("--beta", pe_beta, "Single evaluation point");
  auto* grid_opt = pe->add_option("--grid", pe_grid, "Evaluation grid lo:hi:count");
  beta_opt->excludes(grid_opt);

  // bound
  auto* bd = app.add_subcommand("bound", "Evaluate a prior concentration lower bound");
  std::string bd_query;
  std::string bd_method = "family";
  std::optional<double> bd_C;
  bd->add_option("--query", bd_query, "Concentration query JSON (file or inline)")->required();
  bd->add_option("--method", bd_method, "family or generic")
      ->check(CLI::IsMember({"family", "generic"}));
  bd->add_option("--C", bd_C, "Schedule constant; adds the -log decomposition to the output");

  // sample
  auto* sp = app.add_subcommand("sample", "Sample the posterior for a stored dataset");
  std::string sp_data, sp_prior, sp_sampler = "{}", sp_out;
  std::optional<double> sp_sigma2;
  sp->add_option("--data", sp_data, "Dataset directory written by gen-data")->required();
  sp->add_option("--prior", sp_prior, "Prior JSON (file or inline)")->required();
  sp->add_option("--sampler", sp_sampler, "Sampler config JSON (file or inline)");
  sp->add_option("--sigma2", sp_sigma2, "Noise variance; defaults to the dataset config");
  sp->add_option("--out", sp_out, "Output directory")->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "Run a grid sweep");
  std::string sw_kind, sw_spec, sw_out;
  std::optional<unsigned> sw_jobs;
  std::optional<double> sw_Delta, sw_d;
  sw->add_option("kind", sw_kind, "consistency, concentration or lemma1")
      ->required()
      ->check(CLI::IsMember({"consistency", "concentration", "lemma1"}));
  sw->add_option("--spec", sw_spec, "Sweep spec JSON (file or inline)")->required();
  sw->add_option("--out", sw_out, "Output directory")->required();
  sw->add_option("--jobs", sw_jobs, "Worker threads (default: number of processors)");
  sw->add_option("--Delta", sw_Delta, "Ball radius constant for concentration sweeps");
  sw->add_option("--d", sw_d, "Rate constant for concentration sweeps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  const bool seed_given = seed_opt->count() > 0;

  if (*gen) {
    auto cfg = io::model_config_from_json(load_json_arg(gen_config, "config"));
    if (seed_given) cfg.seed = seed;
    const auto ds = sl::generate_dataset(cfg);
    io::write_dataset(gen_out, ds, cfg);
    std::cerr << "wrote dataset n=" << cfg.n << " p=" << cfg.p << " to " << gen_out << '\n';
    return 0;
  }

  if (*chk) {
    const json spec = load_json_arg(chk_spec, "spec");
    const double rho = io::detail::num(spec, "rho", "");
    const json& configs = io::detail::member(spec, "configs", "");
    if (!configs.is_array()) throw sl::ValidationError("expected an array", "/configs");
    std::vector<sl::ModelConfig> grid;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      auto c = io::model_config_from_json(configs[i], "/configs/" + std::to_string(i));
      if (seed_given) c.seed = sl::derive_seed(seed, i);
      grid.push_back(std::move(c));
    }
    sl::AssumptionThresholds thr;
    if (spec.contains("thresholds")) thr = io::thresholds_from_json(spec.at("thresholds"), "/thresholds");
    print_json(io::to_json(sl::check_assumptions(grid, rho, thr)));
    return 0;
  }

  if (*pe) {
    const auto prior = io::prior_from_json(load_json_arg(pe_prior, "prior"));
    if (pe_beta) {
      print_json(prior_point(prior, *pe_beta));
    } else if (!pe_grid.empty()) {
      const auto g = parse_grid(pe_grid);
      json out = json::array();
      for (std::size_t i = 0; i < g.count; ++i) {
        const double t = g.count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(g.count - 1);
        out.push_back(prior_point(prior, g.lo + t * (g.hi - g.lo)));
      }
      print_json(out);
    } else {
      throw sl::ValidationError("prior-eval needs --beta or --grid", "/beta");
    }
    return 0;
  }

  if (*bd) {
    const auto q = io::query_from_json(load_json_arg(bd_query, "query"));
    const auto report =
        bd_method == "generic" ? sl::generic_lower_bound(q) : sl::family_lower_bound(q);
    json out = io::to_json(report);
    if (bd_C) out["decomposition"] = io::to_json(sl::neg_log_decomposition(q, *bd_C));
    print_json(out);
    return 0;
  }

  if (*sp) {
    const auto loaded = io::read_dataset(sp_data);
    const auto prior = io::prior_from_json(load_json_arg(sp_prior, "prior"));
    auto cfg = io::sampler_from_json(load_json_arg(sp_sampler, "sampler"));
    if (seed_given) cfg.seed = seed;
    double sigma2 = 1.0;
    if (sp_sigma2) {
      sigma2 = *sp_sigma2;
    } else if (loaded.meta.contains("config") && loaded.meta["config"].contains("sigma2")) {
      sigma2 = io::detail::num(loaded.meta["config"], "sigma2", "/config");
    }
    const auto samples = sl::sample_posterior(loaded.data, sigma2, prior, cfg);
    fs::create_directories(sp_out);
    {
      auto os = io::open_out(fs::path(sp_out) / "draws.csv");
      io::write_draws_csv(os, samples);
    }
    json summary = io::draws_summary(samples);
    summary["prior"] = io::to_json(prior);
    summary["sampler"] = io::to_json(cfg);
    summary["sigma2"] = sigma2;
    {
      auto os = io::open_out(fs::path(sp_out) / "summary.json");
      os << summary.dump(2) << '\n';
    }
    std::cerr << "acceptance rate " << samples.acceptance_rate << '\n';
    return 0;
  }

  if (*sw) {
    auto spec = io::sweep_spec_from_json(load_json_arg(sw_spec, "spec"));
    if (seed_given) spec.base_seed = seed;
    if (sw_jobs) spec.jobs = *sw_jobs;
    const auto start = std::chrono::steady_clock::now();
    std::vector<sl::SweepRow> rows;
    json extra = json::object();
    if (sw_kind == "consistency") {
      rows = sl::run_consistency_sweep(spec);
    } else if (sw_kind == "concentration") {
      const double Delta = sw_Delta.value_or(spec.Delta);
      const double d = sw_d.value_or(spec.d);
      extra = json{{"Delta", Delta}, {"d", d}};
      rows = sl::run_concentration_sweep(spec, Delta, d);
    } else {
      rows = sl::run_lemma1_sweep(spec);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fs::create_directories(sw_out);
    {
      auto os = io::open_out(fs::path(sw_out) / "rows.csv");
      io::write_sweep_csv(os, rows);
    }
    json manifest{{"kind", sw_kind},
                  {"spec", io::to_json(spec)},
                  {"version", sl::version()},
                  {"git_hash", sl::git_hash()},
                  {"wall_time_seconds", wall},
                  {"rows", rows.size()}};
    if (!extra.empty()) manifest["arguments"] = extra;
    {
      auto os = io::open_out(fs::path(sw_out) / "manifest.json");
      os << manifest.dump(2) << '\n';
    }
    std::cerr << "wrote " << rows.size() << " rows to " << sw_out << " in " << wall << " s\n";
    return 0;
  }
  return 1;
}

void report_error(const char* kind, const std::string& message, const std::string& field = {}) {
  json err{{"error", kind}, {"message", message}};
  if (!field.empty()) err["field"] = field;
  std::cerr << err.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const shrinklab::ValidationError& e) {
    report_error("validation", e.what(), e.field());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    report_error("validation", e.what());
    return 1;
  } catch (const shrinklab::NumericalError& e) {
    report_error("numerical", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    report_error("validation", e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("numerical", e.what());
    return 2;
  }
}
