#include "conlab/cli.hpp"

#include "conlab/errors.hpp"
#include "conlab/gmm.hpp"
#include "conlab/harness.hpp"
#include "conlab/io.hpp"
#include "conlab/rates.hpp"
#include "conlab/regression.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

namespace conlab {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "RNG seed (overrides the config)");
  sub->add_option("--out-dir", c.out_dir, "directory for output files");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

nlohmann::json load_json(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

/// An existing edge-list file, or `name[:n]` for a built-in family.
Graph resolve_graph(const std::string& arg, std::uint64_t seed) {
  if (fs::exists(arg)) return load_edge_list(arg);
  GraphSource src;
  const auto colon = arg.find(':');
  src.builder = arg.substr(0, colon);
  if (colon != std::string::npos) {
    try {
      src.n = std::stoul(arg.substr(colon + 1));
    } catch (const std::logic_error&) {
      throw ConfigError("bad graph size in '" + arg + "'");
    }
  }
  if (src.builder == "fig1") src.builder = "five_agent";
  static const char* known[] = {"ring", "path", "complete", "star", "five_agent", "random"};
  if (std::find(std::begin(known), std::end(known), src.builder) == std::end(known)) {
    throw IoError("graph file not found: " + arg);
  }
  return src.build(seed);
}

int cmd_table1(std::ostream& out, const Common& c) {
  std::ostringstream csv;
  csv << "d,coefficient\n";
  for (int d = 1; d <= 5; ++d) csv << d << ',' << fixed(tangency_coefficient(d), 3) << '\n';
  out << csv.str();
  if (c.out_dir) write_text_file(fs::path(*c.out_dir) / "table1.csv", csv.str());
  return 0;
}

struct RatesArgs {
  std::string graph;
  double delta = 0.0;
  int dmax = 10;
};

int cmd_rates(std::ostream& out, const RatesArgs& a, const Common& c) {
  if (a.dmax < 0) throw ConfigError("--dmax must be nonnegative");
  const Graph g = resolve_graph(a.graph, c.seed.value_or(0));
  const Spectrum& sp = g.spectrum();
  const AcceleratingBound bound = accelerating_bound(a.delta, sp);
  std::ostringstream csv;
  csv << "d,r_d,r_0,theorem1_pass,monotone\n";
  for (int d = 0; d <= a.dmax; ++d) {
    const RatePrediction p = convergence_factor(d, a.delta, sp);
    csv << d << ',' << format_csv(p.factor) << ',' << format_csv(p.baseline) << ','
        << (bound.certifies(d) ? 1 : 0) << ',' << (monotonicity_region(a.delta, sp, d) ? 1 : 0)
        << '\n';
  }
  out << csv.str();
  if (c.out_dir) write_text_file(fs::path(*c.out_dir) / "rates.csv", csv.str());
  return 0;
}

int cmd_run(std::ostream& out, const std::string& config, const Common& c) {
  const fs::path path(config);
  Experiment exp = parse_experiment(load_json(path), path.parent_path());
  if (c.seed) exp.seed = *c.seed;
  if (c.out_dir) exp.sink = *c.out_dir;
  const ExperimentResult result = run_experiment(exp);
  write_experiment(result, exp.sink);
  for (const auto& e : result.report.ranking) {
    out << e.name << ',' << (e.measured_factor ? format_csv(*e.measured_factor) : "") << '\n';
  }
  return result.report.failures.empty() ? 0 : static_cast<int>(ExitCode::Numeric);
}

int cmd_gmm(std::ostream& out, const std::string& config, const Common& c) {
  const fs::path path(config);
  gmm::EmConfig cfg = gmm::parse_em_config(load_json(path), path.parent_path());
  if (c.seed) cfg.seed = *c.seed;
  const gmm::EmResult r = gmm::distributed_em(cfg);
  const fs::path dir = c.out_dir ? fs::path(*c.out_dir) : fs::path("out");

  nlohmann::json agents = nlohmann::json::array();
  for (std::size_t i = 0; i < r.agent_models.size(); ++i) {
    agents.push_back({{"agent", i + 1}, {"bases", gmm::model_to_json(r.agent_models[i])}});
  }
  const nlohmann::json doc{{"agents", std::move(agents)},
                           {"central", gmm::model_to_json(r.central_model)},
                           {"truth", gmm::model_to_json(r.truth)},
                           {"covariance_floors", r.diagnostics.covariance_floors},
                           {"mass_guards", r.diagnostics.mass_guards}};
  write_text_file(dir / "gmm_models.json", doc.dump(2) + "\n");

  std::ostringstream csv;
  csv << "iteration";
  for (std::size_t i = 0; i < r.agent_models.size(); ++i) csv << ",agent_" << i + 1;
  csv << ",central\n";
  for (std::size_t k = 0; k < r.agent_loglik.size(); ++k) {
    csv << k;
    for (const double v : r.agent_loglik[k]) csv << ',' << format_csv(v);
    csv << ',' << format_csv(r.central_loglik[k]) << '\n';
  }
  write_text_file(dir / "gmm_loglik.csv", csv.str());
  out << "final_gap_agent_1," << format_csv(r.final_gap(0)) << '\n';
  return 0;
}

struct RegressArgs {
  std::string data;
  double b = 4.267;
  std::string alg = "laplacian";
  int d = 0;
  std::size_t rounds = 100;
  std::string graph;
  std::optional<double> delta;
  std::size_t agents = 5;
  std::size_t points = 50;
};

int cmd_regress(std::ostream& out, const RegressArgs& a, const Common& c) {
  const std::uint64_t seed = c.seed.value_or(0);
  const RegressionProblem problem =
      a.data.empty() ? synthetic_regression(a.points, a.agents, seed, 1.373, a.b)
                     : load_regression_csv(a.data, a.b, a.agents);
  const Graph g = a.graph.empty() ? (a.agents == 5 ? five_agent_graph() : ring(a.agents))
                                  : resolve_graph(a.graph, seed);
  Algorithm kind = parse_algorithm(a.alg);
  if (kind == Algorithm::Laplacian && a.d > 0) kind = Algorithm::BufferedLaplacian;
  const AlgorithmSpec spec = AlgorithmSpec::tuned(kind, g, ParameterSource::Exact, a.delta, a.d);
  const RegressionRun run = distributed_regression(problem, g, spec, a.rounds);
  const auto err = run.error();

  std::ostringstream csv;
  csv << "round";
  for (Eigen::Index i = 0; i < run.estimates.cols(); ++i) csv << ",agent_" << i + 1;
  csv << ",error\n";
  for (Eigen::Index k = 0; k < run.estimates.rows(); ++k) {
    csv << k;
    for (Eigen::Index i = 0; i < run.estimates.cols(); ++i) csv << ',' << format_csv(run.estimates(k, i));
    csv << ',' << format_csv(err[static_cast<std::size_t>(k)]) << '\n';
  }
  const fs::path dir = c.out_dir ? fs::path(*c.out_dir) : fs::path("out");
  write_text_file(dir / ("regression_" + spec.name() + ".csv"), csv.str());
  out << "central_slope," << format_csv(run.target) << '\n';
  return 0;
}

void report(std::ostream& err, const std::string& kind, ExitCode code, const std::string& msg) {
  const nlohmann::json j{{"error", {{"kind", kind}, {"code", static_cast<int>(code)}, {"message", msg}}}};
  err << j.dump() << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Consensus algorithm laboratory", "consensus-lab"};
  app.require_subcommand(1);

  Common common;
  std::string config;

  auto* run = app.add_subcommand("run", "compare algorithms on one graph and input");
  run->add_option("--config", config, "experiment JSON")->required();
  add_common(run, common);

  RatesArgs rates_args;
  auto* rates = app.add_subcommand("rates", "predicted factors of the buffered iteration");
  rates->add_option("--graph", rates_args.graph, "edge-list file or family[:n]")->required();
  rates->add_option("--delta", rates_args.delta, "step size")->required();
  rates->add_option("--dmax", rates_args.dmax, "largest buffer depth")->capture_default_str();
  add_common(rates, common);

  auto* gmm_cmd = app.add_subcommand("gmm", "distributed EM for a Gaussian mixture");
  gmm_cmd->add_option("--config", config, "GMM JSON")->required();
  add_common(gmm_cmd, common);

  RegressArgs reg;
  auto* regress = app.add_subcommand("regress", "distributed slope estimation");
  regress->add_option("--data", reg.data, "CSV with columns x,y (synthetic when omitted)");
  regress->add_option("--b", reg.b, "known intercept")->capture_default_str();
  regress->add_option("--alg", reg.alg, "laplacian, buffered, nag_c, tm, nag_sc")->capture_default_str();
  regress->add_option("--d", reg.d, "buffer depth")->capture_default_str();
  regress->add_option("--rounds", reg.rounds, "communication rounds")->capture_default_str();
  regress->add_option("--graph", reg.graph, "edge-list file or family[:n]");
  regress->add_option("--delta", reg.delta, "step size (default 1/lambda_N)");
  regress->add_option("--agents", reg.agents, "number of agents")->capture_default_str();
  regress->add_option("--points", reg.points, "synthetic points")->capture_default_str();
  add_common(regress, common);

  auto* table1 = app.add_subcommand("table1", "tangency coefficients d^d/(d+1)^(d+1)");
  add_common(table1, common);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      throw ConfigError(e.what());
    }
    apply_thread_config();
    if (*run) return cmd_run(out, config, common);
    if (*rates) return cmd_rates(out, rates_args, common);
    if (*gmm_cmd) return cmd_gmm(out, config, common);
    if (*regress) return cmd_regress(out, reg, common);
    if (*table1) return cmd_table1(out, common);
    throw ConfigError("no subcommand given");
  } catch (const Error& e) {
    report(err, e.kind(), e.exit_code(), e.what());
    return static_cast<int>(e.exit_code());
  } catch (const nlohmann::json::exception& e) {
    report(err, "ConfigError", ExitCode::Config, e.what());
    return static_cast<int>(ExitCode::Config);
  } catch (const fs::filesystem_error& e) {
    report(err, "IoError", ExitCode::Io, e.what());
    return static_cast<int>(ExitCode::Io);
  } catch (const std::exception& e) {
    report(err, "InternalError", ExitCode::Numeric, e.what());
    return static_cast<int>(ExitCode::Numeric);
  }
}

}  // namespace conlab
