#include "conlab/gmm.hpp"

#include "conlab/errors.hpp"
#include "conlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace conlab::gmm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::Matrix2d floor_covariance(const Eigen::Matrix2d& cov, const Eigen::Matrix2d& fallback,
                                 double floor, Diagnostics* diag) {
  Eigen::Matrix2d sym = 0.5 * (cov + cov.transpose());
  if (!sym.allFinite()) {
    if (diag) ++diag->covariance_floors;
    return fallback;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(sym);
  Eigen::Vector2d values = eig.eigenvalues();
  if (values.minCoeff() >= floor) return sym;
  if (diag) ++diag->covariance_floors;
  values = values.cwiseMax(floor);
  const Eigen::Matrix2d& v = eig.eigenvectors();
  Eigen::Matrix2d out = v * values.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

Eigen::Matrix2d unpack_scatter(const Eigen::MatrixXd& scatter, Eigen::Index l) {
  Eigen::Matrix2d m;
  m << scatter(l, 0), scatter(l, 1), scatter(l, 1), scatter(l, 2);
  return m;
}

void require_valid(const Model& m) {
  if (m.means.size() != m.size() || m.covariances.size() != m.size() || m.size() == 0) {
    throw DimensionError("mixture model has inconsistent component counts");
  }
}

}  // namespace

double log_gaussian(const Point& p, const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov) {
  const Eigen::LLT<Eigen::Matrix2d> llt(cov);
  if (llt.info() != Eigen::Success) return kNegInf;
  const Eigen::Vector2d w = llt.matrixL().solve(p - mean);
  const Eigen::Matrix2d& lmat = llt.matrixL();
  const double log_det = 2.0 * (std::log(lmat(0, 0)) + std::log(lmat(1, 1)));
  return -std::log(2.0 * std::numbers::pi) - 0.5 * log_det - 0.5 * w.squaredNorm();
}

Eigen::MatrixXd e_step(const Model& model, std::span<const Point> points) {
  require_valid(model);
  const auto bases = static_cast<Eigen::Index>(model.size());
  Eigen::MatrixXd resp(bases, static_cast<Eigen::Index>(points.size()));
  for (std::size_t n = 0; n < points.size(); ++n) {
    const auto col = static_cast<Eigen::Index>(n);
    double peak = kNegInf;
    for (Eigen::Index l = 0; l < bases; ++l) {
      const auto li = static_cast<std::size_t>(l);
      const double lw = model.weights[li] > 0.0 ? std::log(model.weights[li]) : kNegInf;
      resp(l, col) = lw + log_gaussian(points[n], model.means[li], model.covariances[li]);
      peak = std::max(peak, resp(l, col));
    }
    if (!std::isfinite(peak)) {
      throw DegenerateDensityError("every mixture component vanishes at point " +
                                   std::to_string(n));
    }
    resp.col(col) = (resp.col(col).array() - peak).exp();
    resp.col(col) /= resp.col(col).sum();
  }
  return resp;
}

double log_likelihood(const Model& model, std::span<const Point> points) {
  require_valid(model);
  double total = 0.0;
  std::vector<double> terms(model.size());
  for (const auto& p : points) {
    double peak = kNegInf;
    for (std::size_t l = 0; l < model.size(); ++l) {
      const double lw = model.weights[l] > 0.0 ? std::log(model.weights[l]) : kNegInf;
      terms[l] = lw + log_gaussian(p, model.means[l], model.covariances[l]);
      peak = std::max(peak, terms[l]);
    }
    if (!std::isfinite(peak)) return kNegInf;
    double acc = 0.0;
    for (const double t : terms) acc += std::exp(t - peak);
    total += peak + std::log(acc);
  }
  return total;
}

Statistics Statistics::zeros(std::size_t bases) {
  const auto b = static_cast<Eigen::Index>(bases);
  return {Eigen::VectorXd::Zero(b), Eigen::MatrixXd::Zero(b, 2), Eigen::MatrixXd::Zero(b, 3)};
}

Statistics& Statistics::operator+=(const Statistics& other) {
  mass += other.mass;
  first += other.first;
  scatter += other.scatter;
  return *this;
}

Statistics local_statistics(const Model& model, const Eigen::MatrixXd& responsibilities,
                            std::span<const Point> points) {
  require_valid(model);
  if (responsibilities.rows() != static_cast<Eigen::Index>(model.size()) ||
      responsibilities.cols() != static_cast<Eigen::Index>(points.size())) {
    throw DimensionError("responsibility matrix does not match model and points");
  }
  Statistics s = Statistics::zeros(model.size());
  for (Eigen::Index l = 0; l < responsibilities.rows(); ++l) {
    const Eigen::Vector2d& mu = model.means[static_cast<std::size_t>(l)];
    for (std::size_t n = 0; n < points.size(); ++n) {
      const double z = responsibilities(l, static_cast<Eigen::Index>(n));
      const Eigen::Vector2d dev = points[n] - mu;
      s.mass(l) += z;
      s.first.row(l) += z * points[n].transpose();
      s.scatter(l, 0) += z * dev.x() * dev.x();
      s.scatter(l, 1) += z * dev.x() * dev.y();
      s.scatter(l, 2) += z * dev.y() * dev.y();
    }
  }
  return s;
}

Model assemble_model(const Statistics& global, const Model& previous, std::size_t total_points,
                     double covariance_floor, Diagnostics* diag) {
  require_valid(previous);
  const std::size_t bases = previous.size();
  const double m_total = static_cast<double>(total_points);
  Model out = previous;
  for (std::size_t l = 0; l < bases; ++l) {
    const auto li = static_cast<Eigen::Index>(l);
    const double mass = global.mass(li);
    if (!(mass > 1e-12 * m_total) || !std::isfinite(mass)) {
      if (diag) ++diag->mass_guards;
      out.weights[l] = 0.0;
      continue;
    }
    out.weights[l] = mass / m_total;
    const Eigen::Vector2d mu = global.first.row(li).transpose() / mass;
    const Eigen::Vector2d shift = mu - previous.means[l];
    const Eigen::Matrix2d cov = unpack_scatter(global.scatter, li) / mass - shift * shift.transpose();
    out.means[l] = mu;
    out.covariances[l] = floor_covariance(cov, previous.covariances[l], covariance_floor, diag);
  }
  double total = 0.0;
  for (const double w : out.weights) total += w;
  if (total > 0.0) {
    for (double& w : out.weights) w /= total;
  }
  return out;
}

Model centralized_m_step(const Eigen::MatrixXd& responsibilities, std::span<const Point> points,
                         double covariance_floor, Diagnostics* diag) {
  const auto bases = static_cast<std::size_t>(responsibilities.rows());
  Model out;
  out.weights.resize(bases);
  out.means.resize(bases);
  out.covariances.resize(bases);
  const double m_total = static_cast<double>(points.size());
  for (std::size_t l = 0; l < bases; ++l) {
    const auto li = static_cast<Eigen::Index>(l);
    double mass = 0.0;
    Eigen::Vector2d first = Eigen::Vector2d::Zero();
    for (std::size_t n = 0; n < points.size(); ++n) {
      const double z = responsibilities(li, static_cast<Eigen::Index>(n));
      mass += z;
      first += z * points[n];
    }
    const Eigen::Vector2d mu = first / mass;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (std::size_t n = 0; n < points.size(); ++n) {
      const Eigen::Vector2d dev = points[n] - mu;
      cov += responsibilities(li, static_cast<Eigen::Index>(n)) * dev * dev.transpose();
    }
    out.weights[l] = mass / m_total;
    out.means[l] = mu;
    const Eigen::Matrix2d fallback =
        Eigen::Matrix2d::Identity() * std::max(covariance_floor, 1e-300);
    out.covariances[l] = floor_covariance(cov / mass, fallback, covariance_floor, diag);
  }
  return out;
}

std::vector<Model> distributed_m_step(const Graph* g, const AlgorithmSpec& spec,
                                      std::span<const Statistics> local,
                                      std::span<const Model> previous, std::size_t total_points,
                                      std::size_t consensus_rounds, double covariance_floor,
                                      Diagnostics* diag) {
  const std::size_t agents = local.size();
  if (agents == 0 || previous.size() != agents) {
    throw DimensionError("need one set of statistics and one previous model per agent");
  }
  if (agents == 1) {
    return {assemble_model(local[0], previous[0], total_points, covariance_floor, diag)};
  }
  if (g == nullptr || g->size() != agents) {
    throw DimensionError("distributed M-step needs a graph over all " + std::to_string(agents) +
                         " agents");
  }
  const auto bases = static_cast<Eigen::Index>(previous[0].size());
  const auto n = static_cast<Eigen::Index>(agents);
  StateMatrix mass(n, bases);
  StateMatrix first(n, 2 * bases);
  StateMatrix scatter(n, 3 * bases);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = local[static_cast<std::size_t>(i)];
    if (s.mass.size() != bases) throw DimensionError("statistics with mismatched component count");
    for (Eigen::Index l = 0; l < bases; ++l) {
      mass(i, l) = s.mass(l);
      first(i, 2 * l) = s.first(l, 0);
      first(i, 2 * l + 1) = s.first(l, 1);
      for (Eigen::Index c = 0; c < 3; ++c) scatter(i, 3 * l + c) = s.scatter(l, c);
    }
  }

  // Three average-consensus problems; averages times N estimate the sums.
  const StateMatrix mass_avg = run_states(spec, *g, mass, consensus_rounds);
  const StateMatrix first_avg = run_states(spec, *g, first, consensus_rounds);
  const StateMatrix scatter_avg = run_states(spec, *g, scatter, consensus_rounds);

  const double scale = static_cast<double>(agents);
  std::vector<Model> out;
  out.reserve(agents);
  for (Eigen::Index i = 0; i < n; ++i) {
    Statistics est = Statistics::zeros(static_cast<std::size_t>(bases));
    for (Eigen::Index l = 0; l < bases; ++l) {
      est.mass(l) = scale * mass_avg(i, l);
      est.first(l, 0) = scale * first_avg(i, 2 * l);
      est.first(l, 1) = scale * first_avg(i, 2 * l + 1);
      for (Eigen::Index c = 0; c < 3; ++c) est.scatter(l, c) = scale * scatter_avg(i, 3 * l + c);
    }
    out.push_back(assemble_model(est, previous[static_cast<std::size_t>(i)], total_points,
                                 covariance_floor, diag));
  }
  return out;
}

Model random_mixture(std::size_t bases, const Area& area, std::mt19937_64& rng) {
  const double margin = 0.1 * area.scale();
  std::uniform_real_distribution<double> ux(area.x_min + margin, area.x_max - margin);
  std::uniform_real_distribution<double> uy(area.y_min + margin, area.y_max - margin);
  std::uniform_real_distribution<double> spread(0.025 * area.scale(), 0.075 * area.scale());
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> weight(0.5, 1.5);
  Model m;
  double total = 0.0;
  for (std::size_t l = 0; l < bases; ++l) {
    m.means.emplace_back(ux(rng), uy(rng));
    const double s1 = spread(rng);
    const double s2 = spread(rng);
    const double t = angle(rng);
    Eigen::Matrix2d rot;
    rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    m.covariances.push_back(rot * Eigen::Vector2d(s1 * s1, s2 * s2).asDiagonal() * rot.transpose());
    m.weights.push_back(weight(rng));
    total += m.weights.back();
  }
  for (double& w : m.weights) w /= total;
  return m;
}

std::vector<Point> sample(const Model& model, std::size_t count, const Area& area,
                          std::mt19937_64& rng) {
  require_valid(model);
  std::discrete_distribution<std::size_t> pick(model.weights.begin(), model.weights.end());
  std::normal_distribution<double> normal;
  std::vector<Eigen::Matrix2d> chol;
  for (const auto& c : model.covariances) chol.push_back(Eigen::LLT<Eigen::Matrix2d>(c).matrixL());
  std::vector<Point> pts;
  pts.reserve(count);
  while (pts.size() < count) {
    const std::size_t l = pick(rng);
    const Eigen::Vector2d z(normal(rng), normal(rng));
    const Point p = model.means[l] + chol[l] * z;
    if (area.contains(p)) pts.push_back(p);
  }
  return pts;
}

Model initial_model(std::size_t bases, const Area& area, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(area.x_min, area.x_max);
  std::uniform_real_distribution<double> uy(area.y_min, area.y_max);
  const double var = std::pow(area.scale() / 4.0, 2);
  Model m;
  for (std::size_t l = 0; l < bases; ++l) {
    m.weights.push_back(1.0 / static_cast<double>(bases));
    m.means.emplace_back(ux(rng), uy(rng));
    m.covariances.push_back(Eigen::Matrix2d::Identity() * var);
  }
  return m;
}

std::vector<std::span<const Point>> partition(std::span<const Point> points, std::size_t agents) {
  if (agents == 0 || points.size() < agents) {
    throw DimensionError("cannot split " + std::to_string(points.size()) + " points over " +
                         std::to_string(agents) + " agents");
  }
  std::vector<std::span<const Point>> blocks;
  const std::size_t base = points.size() / agents;
  const std::size_t extra = points.size() % agents;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < agents; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    blocks.push_back(points.subspan(offset, len));
    offset += len;
  }
  return blocks;
}

double EmResult::final_gap(std::size_t agent) const {
  return std::abs(central_loglik.back() - agent_loglik.back().at(agent));
}

Model centralized_em(const Model& init, std::span<const Point> points, std::size_t iterations,
                     double covariance_floor, std::vector<double>* loglik) {
  Model m = init;
  if (loglik) loglik->assign(1, log_likelihood(m, points));
  for (std::size_t it = 0; it < iterations; ++it) {
    m = centralized_m_step(e_step(m, points), points, covariance_floor);
    if (loglik) loglik->push_back(log_likelihood(m, points));
  }
  return m;
}

EmResult distributed_em(const EmConfig& config) {
  const Graph g = config.graph.build(config.seed);
  std::mt19937_64 rng(config.seed);
  const Model truth = random_mixture(config.bases, config.area, rng);
  const auto points = sample(truth, config.points, config.area, rng);
  return distributed_em(config, g, truth, points);
}

EmResult distributed_em(const EmConfig& config, const Graph& g, const Model& truth,
                        std::span<const Point> points) {
  const std::size_t agents = g.size();
  const AlgorithmSpec spec = config.inner.resolve(g);
  const double floor = config.covariance_floor();
  const auto shards = partition(points, agents);

  std::vector<Model> models;
  models.reserve(agents);
  for (std::size_t i = 0; i < agents; ++i) {
    const std::uint64_t s = config.shared_init ? config.init_seed
                                               : config.init_seed + 0x632be59bd9b4e019ULL * (i + 1);
    std::mt19937_64 rng(s);
    models.push_back(initial_model(config.bases, config.area, rng));
  }

  EmResult result;
  result.truth = truth;
  result.central_model =
      centralized_em(models[0], points, config.em_iterations, floor, &result.central_loglik);

  const auto record = [&] {
    std::vector<double> ll(agents);
    for (std::size_t i = 0; i < agents; ++i) ll[i] = log_likelihood(models[i], points);
    result.agent_loglik.push_back(std::move(ll));
  };
  record();

  std::vector<Statistics> stats(agents);
  for (std::size_t it = 0; it < config.em_iterations; ++it) {
    for (std::size_t i = 0; i < agents; ++i) {
      stats[i] = local_statistics(models[i], e_step(models[i], shards[i]), shards[i]);
    }
    models = distributed_m_step(&g, spec, stats, models, points.size(), config.consensus_rounds,
                                floor, &result.diagnostics);
    record();
  }
  result.agent_models = std::move(models);
  return result;
}

EmConfig parse_em_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  reject_unknown_fields(j,
                        {"N", "topology", "edges", "edge_prob", "M", "Ns", "T_em", "T_consensus",
                         "inner_alg", "params", "step", "buffer", "seed", "init_seed",
                         "shared_init"},
                        "gmm");
  EmConfig c;
  try {
    if (j.contains("N")) c.graph.n = j.at("N").get<std::size_t>();
    if (j.contains("topology")) c.graph.builder = j.at("topology").get<std::string>();
    if (j.contains("edge_prob")) c.graph.edge_prob = j.at("edge_prob").get<double>();
    if (j.contains("edges")) {
      c.graph.builder = "edges";
      c.graph.edges = j.at("edges").get<std::string>();
      if (c.graph.edges.is_relative()) c.graph.edges = base_dir / c.graph.edges;
    }
    if (j.contains("M")) c.points = j.at("M").get<std::size_t>();
    if (j.contains("Ns")) c.bases = j.at("Ns").get<std::size_t>();
    if (j.contains("T_em")) c.em_iterations = j.at("T_em").get<std::size_t>();
    if (j.contains("T_consensus")) c.consensus_rounds = j.at("T_consensus").get<std::size_t>();
    if (j.contains("inner_alg")) c.inner.kind = parse_algorithm(j.at("inner_alg").get<std::string>());
    if (j.contains("params")) {
      const auto p = j.at("params").get<std::string>();
      if (p == "exact") {
        c.inner.source = ParameterSource::Exact;
      } else if (p == "bounds") {
        c.inner.source = ParameterSource::Bounds;
      } else {
        throw ConfigError("gmm.params must be 'exact' or 'bounds'");
      }
    }
    if (j.contains("step")) c.inner.step = j.at("step").get<double>();
    if (j.contains("buffer")) c.inner.buffer = j.at("buffer").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("init_seed")) c.init_seed = j.at("init_seed").get<std::uint64_t>();
    if (j.contains("shared_init")) c.shared_init = j.at("shared_init").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("gmm: ") + e.what());
  }
  if (c.bases == 0) throw ConfigError("gmm.Ns must be positive");
  if (c.points < c.graph.n) throw ConfigError("gmm.M must be at least N");
  return c;
}

nlohmann::json model_to_json(const Model& model) {
  nlohmann::json comps = nlohmann::json::array();
  for (std::size_t l = 0; l < model.size(); ++l) {
    const auto& c = model.covariances[l];
    comps.push_back({{"weight", round12(model.weights[l])},
                     {"mean", {round12(model.means[l].x()), round12(model.means[l].y())}},
                     {"covariance",
                      {{round12(c(0, 0)), round12(c(0, 1))}, {round12(c(1, 0)), round12(c(1, 1))}}}});
  }
  return comps;
}

double max_disagreement(std::span<const Model> models) {
  const auto flatten = [](const Model& m) {
    std::vector<double> v;
    for (std::size_t l = 0; l < m.size(); ++l) {
      v.push_back(m.weights[l]);
      v.push_back(m.means[l].x());
      v.push_back(m.means[l].y());
      v.push_back(m.covariances[l](0, 0));
      v.push_back(m.covariances[l](0, 1));
      v.push_back(m.covariances[l](1, 1));
    }
    return v;
  };
  double worst = 0.0;
  for (std::size_t a = 0; a < models.size(); ++a) {
    const auto va = flatten(models[a]);
    for (std::size_t b = a + 1; b < models.size(); ++b) {
      const auto vb = flatten(models[b]);
      double sq = 0.0;
      for (std::size_t k = 0; k < va.size(); ++k) sq += (va[k] - vb[k]) * (va[k] - vb[k]);
      worst = std::max(worst, std::sqrt(sq));
    }
  }
  return worst;
}

}  // namespace conlab::gmm
