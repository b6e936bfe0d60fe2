#pragma once

// Dataset directories (X.csv, y.csv, beta0.csv, meta.json) and posterior
// draw summaries.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "shrinklab/errors.hpp"
#include "shrinklab/io/csv.hpp"
#include "shrinklab/io/json.hpp"
#include "shrinklab/model_core.hpp"
#include "shrinklab/posterior.hpp"

namespace shrinklab::io {

namespace fs = std::filesystem;

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open '" + path.string() + "' for writing");
  return os;
}

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open '" + path.string() + "' for reading");
  return is;
}

inline std::string read_file(const fs::path& path) {
  auto is = open_in(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void write_dataset(const fs::path& dir, const Dataset& ds, const ModelConfig& config) {
  fs::create_directories(dir);
  {
    auto os = open_out(dir / "X.csv");
    write_matrix_csv(os, ds.X);
  }
  {
    auto os = open_out(dir / "y.csv");
    write_matrix_csv(os, ds.y);
  }
  {
    auto os = open_out(dir / "beta0.csv");
    write_matrix_csv(os, ds.beta0);
  }
  json meta{{"config", to_json(config)}, {"seed", config.seed}, {"active_set", ds.active_set}};
  auto os = open_out(dir / "meta.json");
  os << meta.dump(2) << '\n';
}

struct LoadedDataset {
  Dataset data;
  json meta;
};

inline LoadedDataset read_dataset(const fs::path& dir) {
  LoadedDataset out;
  {
    auto is = open_in(dir / "X.csv");
    out.data.X = read_matrix_csv(is, "X.csv");
  }
  {
    auto is = open_in(dir / "y.csv");
    const MatrixXd y = read_matrix_csv(is, "y.csv");
    if (y.cols() != 1 || y.rows() != out.data.X.rows())
      throw ValidationError("y.csv must be a column with one entry per row of X.csv");
    out.data.y = y.col(0);
  }
  {
    auto is = open_in(dir / "beta0.csv");
    const MatrixXd b = read_matrix_csv(is, "beta0.csv");
    if (b.cols() != 1 || b.rows() != out.data.X.cols())
      throw ValidationError("beta0.csv must be a column with one entry per column of X.csv");
    out.data.beta0 = b.col(0);
  }
  out.meta = parse_text(read_file(dir / "meta.json"), "meta.json");
  for (Eigen::Index j = 0; j < out.data.beta0.size(); ++j)
    if (out.data.beta0(j) != 0.0) out.data.active_set.push_back(static_cast<std::size_t>(j));
  return out;
}

inline json draws_summary(const PosteriorSamples& s) {
  static const std::vector<double> probs{0.025, 0.25, 0.5, 0.75, 0.975};
  json mean = json::array();
  json quantiles = json::object();
  for (double pr : probs) quantiles[format_real(pr)] = json::array();
  for (Eigen::Index j = 0; j < s.draws.cols(); ++j) {
    const VectorXd col = s.draws.col(j);
    mean.push_back(col.mean());
    const std::vector<double> v(col.data(), col.data() + col.size());
    for (double pr : probs) quantiles[format_real(pr)].push_back(quantile(v, pr));
  }
  return json{{"mean", mean},
              {"quantiles", quantiles},
              {"acceptance_rate", s.acceptance_rate},
              {"final_proposal_scale", s.final_proposal_scale},
              {"draws", s.draws.rows()},
              {"seed", s.seed}};
}

}  // namespace shrinklab::io
