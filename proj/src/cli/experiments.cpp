#include "pcesocp/cli/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>

#include "pcesocp/mc.hpp"

namespace pcesocp::cli {

using nlohmann::json;

Experiment parse_experiment(std::string_view name) {
  if (name == "table1") return Experiment::Table1;
  if (name == "surfaces") return Experiment::Surfaces;
  if (name == "bands") return Experiment::Bands;
  if (name == "robust") return Experiment::Robust;
  if (name == "propagate") return Experiment::Propagate;
  throw UsageError("unknown experiment '" + std::string(name) + "'");
}

std::string_view to_string(Experiment experiment) {
  switch (experiment) {
    case Experiment::Table1: return "table1";
    case Experiment::Surfaces: return "surfaces";
    case Experiment::Bands: return "bands";
    case Experiment::Robust: return "robust";
    case Experiment::Propagate: return "propagate";
  }
  return "unknown";
}

ExperimentConfig ExperimentConfig::defaults(Experiment experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  switch (experiment) {
    case Experiment::Table1:
      c.scenario = 0;
      break;
    case Experiment::Surfaces:
      c.degree = 20;
      c.nodes = 21;
      c.coupling = Coupling::Coupled;
      c.scenario = 1;
      break;
    case Experiment::Bands:
      c.degree = 2;
      c.nodes = 5;
      c.scenario = 2;
      break;
    case Experiment::Robust:
      c.degree = 7;
      c.nodes = 15;
      break;
    case Experiment::Propagate:
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (degree < 0) throw UsageError("degree must be non-negative");
  if (nodes == 0) throw UsageError("nodes must be positive");
  if (experiment != Experiment::Table1 && nodes < static_cast<std::size_t>(degree) + 1)
    throw UsageError("nodes (" + std::to_string(nodes) + ") must be at least the basis size " +
                     std::to_string(degree + 1));
  const bool both_allowed = experiment == Experiment::Table1;
  if (!(scenario == 1 || scenario == 2 || (both_allowed && scenario == 0)))
    throw UsageError(both_allowed ? "scenario must be 0 (both), 1 or 2" : "scenario must be 1 or 2");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("dt must be positive");
  if (store_every == 0) throw UsageError("store-every must be positive");
  const double steps = horizon() / (dt * static_cast<double>(store_every));
  if (std::abs(steps - std::round(steps)) > 1e-9 * steps)
    throw UsageError("dt * store-every must divide the 10 s horizon");
  if (mc_n < 2) throw UsageError("mc-n must be at least 2");
  if (output_every == 0) throw UsageError("output-every must be positive");
  if (intervals == 0) throw UsageError("intervals must be positive");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw UsageError("epsilon must lie in (0, 1]");
  if (!(u_lower < u_upper)) throw UsageError("u-lower must be below u-upper");
  if (max_iter == 0) throw UsageError("max-iter must be positive");
  if (experiment == Experiment::Robust) {
    const double per_interval = horizon() / static_cast<double>(intervals) / (dt * static_cast<double>(store_every));
    if (std::abs(per_interval - std::round(per_interval)) > 1e-9)
      throw UsageError("control nodes must fall on stored time points");
  }
}

TimeGrid ExperimentConfig::time_grid() const { return TimeGrid::over(horizon(), dt, store_every); }

drivetrain::Params ExperimentConfig::params() const {
  drivetrain::Params p;
  p.spring_law = spring_law;
  return p;
}

json to_json(const ExperimentConfig& c) {
  return json{{"experiment", to_string(c.experiment)},
              {"degree", c.degree},
              {"nodes", c.nodes},
              {"estimator", c.estimator == EstimatorKind::Projection     ? "pm"
                            : c.estimator == EstimatorKind::LeastSquares ? "ls"
                                                                         : "gls"},
              {"coupling", to_string(c.coupling)},
              {"scenario", c.scenario},
              {"dt", c.dt},
              {"store_every", c.store_every},
              {"mc_n", c.mc_n},
              {"seed", c.seed},
              {"out", c.out},
              {"spring_law", drivetrain::to_string(c.spring_law)},
              {"output_every", c.output_every},
              {"intervals", c.intervals},
              {"epsilon", c.epsilon},
              {"u_lower", c.u_lower},
              {"u_upper", c.u_upper},
              {"max_iter", c.max_iter},
              {"threads", c.threads}};
}

void merge_json(ExperimentConfig& c, const json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "experiment") {
        if (parse_experiment(value.get<std::string>()) != c.experiment)
          throw UsageError("settings are for experiment '" + value.get<std::string>() + "'");
      } else if (key == "degree") c.degree = value.get<int>();
      else if (key == "nodes") c.nodes = value.get<std::size_t>();
      else if (key == "estimator") c.estimator = parse_estimator(value.get<std::string>());
      else if (key == "coupling") c.coupling = parse_coupling(value.get<std::string>());
      else if (key == "scenario") c.scenario = value.get<int>();
      else if (key == "dt") c.dt = value.get<double>();
      else if (key == "store_every") c.store_every = value.get<std::size_t>();
      else if (key == "mc_n") c.mc_n = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "out") c.out = value.get<std::string>();
      else if (key == "spring_law") c.spring_law = drivetrain::parse_spring_law(value.get<std::string>());
      else if (key == "output_every") c.output_every = value.get<std::size_t>();
      else if (key == "intervals") c.intervals = value.get<std::size_t>();
      else if (key == "epsilon") c.epsilon = value.get<double>();
      else if (key == "u_lower") c.u_lower = value.get<double>();
      else if (key == "u_upper") c.u_upper = value.get<double>();
      else if (key == "max_iter") c.max_iter = value.get<std::size_t>();
      else if (key == "threads") c.threads = value.get<std::size_t>();
      else throw UsageError("unknown setting");
    } catch (const json::exception& e) {
      throw UsageError(key + ": " + e.what());
    } catch (const Error& e) {
      throw UsageError(key + ": " + e.what());
    }
  }
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string num(int v) { return std::to_string(v); }

std::string estimator_name(EstimatorKind kind) { return std::string(to_string(kind)); }

}  // namespace

void write_csv(std::ostream& os, const ExperimentConfig& config, const CsvTable& table) {
  os << '#' << to_json(config).dump() << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

ReferenceSurface drivetrain_reference(int scenario, std::size_t points, const TimeGrid& grid,
                                      const drivetrain::Params& params) {
  const auto ens = sample_ensemble(drivetrain::scenario_ode(scenario, params, grid.horizon()),
                                   drivetrain::rest_angle_space(), points, SamplingMode::Grid, 0, grid);
  if (ens.converged_count() != points) throw DivergenceError(grid.horizon());
  return ens.surface;
}

namespace {

EstimatorMap drivetrain_map(EstimatorKind method, std::size_t q, int d) {
  const auto space = drivetrain::rest_angle_space();
  auto rule = gauss_rule(space, q);
  if (method == EstimatorKind::LeastSquares) rule = rule.without_weights();
  return EstimatorMap(PolynomialBasis(space, d), std::move(rule), method);
}

}  // namespace

double table1_rmse(int scenario, EstimatorKind method, Coupling coupling, std::size_t q, int d,
                   const TimeGrid& grid, const ReferenceSurface& reference, const drivetrain::Params& params) {
  const EstimatorMap map = drivetrain_map(method, q, d);
  const auto field = propagate(drivetrain::scenario_ode(scenario, params, grid.horizon()), map, grid, coupling);
  return surface_rmse(field, map.basis(), reference, 0);
}

StochasticOcp robust_ocp(const ExperimentConfig& config) {
  const drivetrain::Params params = config.params();
  params.validate();
  ControlledOde ode;
  ode.state_dim = 2;
  ode.control_dim = 1;
  ode.initial = [](std::span<const double> omega, std::span<double> x0) {
    x0[0] = drivetrain::rest_angle(omega[0]);
    x0[1] = 0.0;
  };
  ode.dynamics = [params](std::span<const double> x, std::span<const double> u, std::span<const double> omega,
                          std::span<double> dx) {
    const auto d = drivetrain::dynamics(0.0, x, u[0], drivetrain::rest_angle(omega[0]), params);
    dx[0] = d[0];
    dx[1] = d[1];
  };

  CostWeights weights;
  weights.state_weight = Eigen::MatrixXd::Identity(2, 2);
  weights.control_weight = Eigen::MatrixXd::Identity(1, 1);
  weights.epsilon = config.epsilon;
  weights.reference = [](double t) {
    const auto r = drivetrain::reference_trajectory(t);
    return Eigen::Vector2d(r.angle, r.rate).eval();
  };

  StochasticOcp ocp{std::move(ode),
                    ControlGrid::uniform(config.horizon(), config.intervals, config.u_lower, config.u_upper),
                    std::move(weights),
                    drivetrain_map(config.estimator, config.nodes, config.degree),
                    config.coupling,
                    config.time_grid()};
  ocp.validate();
  return ocp;
}

Eigen::VectorXd computed_torque_controls(const ControlGrid& grid, const drivetrain::Params& params) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(grid.node_count()));
  for (std::size_t k = 0; k < grid.node_count(); ++k)
    u[static_cast<Eigen::Index>(k)] =
        std::clamp(drivetrain::computed_torque(grid.node_time(k), params), grid.lower[0], grid.upper[0]);
  return u;
}

ReplayStats replay_policy(const ExperimentConfig& config, const Eigen::VectorXd& controls, std::size_t points) {
  const auto ocp = robust_ocp(config);
  UncertainOde ode = close_loop(ocp.ode, ocp.controls, controls);
  ode.horizon = config.horizon();
  ReplayStats stats;
  stats.ensemble = sample_ensemble(ode, drivetrain::rest_angle_space(), points, SamplingMode::Grid, 0,
                                   config.time_grid());
  const double target = drivetrain::reference_trajectory(config.horizon()).angle;
  for (std::size_t s = 0; s < points; ++s) {
    if (stats.ensemble.diverged[s]) {
      ++stats.diverged;
      stats.max_deviation = std::numeric_limits<double>::infinity();
      continue;
    }
    stats.max_deviation =
        std::max(stats.max_deviation, std::abs(stats.ensemble.surface.states[s](Eigen::last, 0) - target));
  }
  return stats;
}

RobustOutcome solve_robust(const ExperimentConfig& config) {
  const auto ocp = robust_ocp(config);
  RobustOutcome out;
  out.baseline = computed_torque_controls(ocp.controls, config.params());
  out.baseline_eval = evaluate_ocp(ocp, out.baseline);
  SolveOptions options;
  options.box.max_iterations = config.max_iter;
  options.box.pg_tolerance = 1e-6;
  options.box.f_tolerance = 1e-10;
  options.threads = config.threads;
  out.solution = solve_ocp(ocp, out.baseline, options);
  out.optimized_eval = evaluate_ocp(ocp, out.solution.controls);
  return out;
}

namespace {

json breakdown_json(const CostBreakdown& b) {
  return json{{"tracking", b.tracking}, {"covariance", b.covariance}, {"control", b.control}, {"total", b.total}};
}

Artifacts run_table1(const ExperimentConfig& config) {
  static constexpr std::size_t kNodes[] = {3, 5, 11, 21};
  static constexpr int kDegrees[] = {2, 4, 10, 20};
  const auto grid = config.time_grid();
  const auto params = config.params();
  CsvTable table{{"scenario", "method", "coupling", "q", "d", "rmse"}, {}};
  json cells = json::array();
  for (int scenario : {1, 2}) {
    if (config.scenario != 0 && config.scenario != scenario) continue;
    const auto reference = drivetrain_reference(scenario, config.mc_n, grid, params);
    for (auto method : {EstimatorKind::Projection, EstimatorKind::LeastSquares})
      for (auto coupling : {Coupling::Decoupled, Coupling::Coupled})
        for (std::size_t q : kNodes)
          for (int d : kDegrees) {
            std::string cell;
            if (static_cast<std::size_t>(d) + 1 <= q) {
              const double rmse = table1_rmse(scenario, method, coupling, q, d, grid, reference, params);
              cell = num(rmse);
              cells.push_back({{"scenario", scenario},
                               {"method", estimator_name(method)},
                               {"coupling", to_string(coupling)},
                               {"q", q},
                               {"d", d},
                               {"rmse", rmse}});
            }
            table.rows.push_back({num(scenario), estimator_name(method), std::string(to_string(coupling)), num(q),
                                  num(d), cell});
          }
  }
  return {{{"table1.csv", std::move(table)}}, json{{"cells", cells.size()}}};
}

Artifacts run_propagate(const ExperimentConfig& config) {
  const auto grid = config.time_grid();
  const EstimatorMap map = drivetrain_map(config.estimator, config.nodes, config.degree);
  const auto field =
      propagate(drivetrain::scenario_ode(config.scenario, config.params(), config.horizon()), map, grid,
                config.coupling);
  CsvTable table{{"t", "state", "mean", "variance"}, {}};
  for (std::size_t i = 0; i < map.terms(); ++i) table.columns.push_back("c" + std::to_string(i));
  for (std::size_t k = 0; k < field.times.size(); ++k) {
    const auto m = moments_from_coefficients(map.basis(), field.blocks[k]);
    for (Eigen::Index s = 0; s < 2; ++s) {
      std::vector<std::string> row{num(field.times[k]), num(static_cast<int>(s) + 1), num(m.mean[s]),
                                   num(m.covariance(s, s))};
      for (Eigen::Index i = 0; i < field.blocks[k].rows(); ++i) row.push_back(num(field.blocks[k](i, s)));
      table.rows.push_back(std::move(row));
    }
  }
  const auto last = moments_from_coefficients(map.basis(), field.blocks.back());
  return {{{"propagate.csv", std::move(table)}},
          json{{"final_mean", {last.mean[0], last.mean[1]}},
               {"final_variance", {last.covariance(0, 0), last.covariance(1, 1)}}}};
}

Artifacts run_surfaces(const ExperimentConfig& config) {
  const auto grid = config.time_grid();
  const auto params = config.params();
  const auto reference = drivetrain_reference(config.scenario, config.mc_n, grid, params);
  const EstimatorMap map = drivetrain_map(config.estimator, config.nodes, config.degree);
  const auto field =
      propagate(drivetrain::scenario_ode(config.scenario, params, config.horizon()), map, grid, config.coupling);
  const auto surrogate = reconstruct_surface(field, map.basis(), reference.points);

  CsvTable table{{"source", "t", "omega", "x1", "x2"}, {}};
  for (const auto* surface : {&reference, &surrogate}) {
    const std::string source = surface == &reference ? "reference" : "gpc";
    for (std::size_t k = 0; k < surface->times.size(); k += config.output_every)
      for (Eigen::Index s = 0; s < surface->points.rows(); ++s) {
        const auto& st = surface->states[static_cast<std::size_t>(s)];
        table.rows.push_back({source, num(surface->times[k]), num(surface->points(s, 0)),
                              num(st(static_cast<Eigen::Index>(k), 0)), num(st(static_cast<Eigen::Index>(k), 1))});
      }
  }
  return {{{"surfaces.csv", std::move(table)}},
          json{{"rmse_x1", surface_rmse(field, map.basis(), reference, 0)},
               {"rmse_x2", surface_rmse(field, map.basis(), reference, 1)}}};
}

// Mean and 0.5 % / 99.5 % percentiles of the surrogate, by evaluating it at
// mid-probability quantiles of the rest-angle distribution.
void surrogate_bands(const CoefficientField& field, const PolynomialBasis& basis, std::size_t samples,
                     const std::string& source, CsvTable& table) {
  const auto space = basis.space();
  Eigen::MatrixXd points(static_cast<Eigen::Index>(samples), 1);
  for (std::size_t j = 0; j < samples; ++j)
    points(static_cast<Eigen::Index>(j), 0) =
        space.marginal(0).quantile((static_cast<double>(j) + 0.5) / static_cast<double>(samples));
  const auto surface = reconstruct_surface(field, basis, points);
  std::vector<double> column(samples);
  for (std::size_t k = 0; k < field.times.size(); ++k) {
    const auto m = moments_from_coefficients(basis, field.blocks[k]);
    for (Eigen::Index c = 0; c < 2; ++c) {
      for (std::size_t j = 0; j < samples; ++j) column[j] = surface.states[j](static_cast<Eigen::Index>(k), c);
      table.rows.push_back({source, num(field.times[k]), num(static_cast<int>(c) + 1), num(m.mean[c]),
                            num(empirical_quantile(column, 0.005)), num(empirical_quantile(column, 0.995))});
    }
  }
}

void ensemble_bands(const EnsembleMoments& m, const std::string& source, CsvTable& table) {
  for (std::size_t k = 0; k < m.times.size(); ++k)
    for (Eigen::Index c = 0; c < 2; ++c) {
      const auto kk = static_cast<Eigen::Index>(k);
      table.rows.push_back({source, num(m.times[k]), num(static_cast<int>(c) + 1), num(m.mean(kk, c)),
                            num(m.lower(kk, c)), num(m.upper(kk, c))});
    }
}

Artifacts run_bands(const ExperimentConfig& config) {
  const auto grid = config.time_grid();
  const auto ode = drivetrain::scenario_ode(config.scenario, config.params(), config.horizon());
  const auto space = drivetrain::rest_angle_space();
  CsvTable table{{"source", "t", "state", "mean", "lower", "upper"}, {}};
  const auto mc = ensemble_moments(sample_ensemble(ode, space, config.mc_n, SamplingMode::MonteCarlo, config.seed, grid));
  ensemble_bands(mc, "mc", table);

  const EstimatorMap map = drivetrain_map(config.estimator, config.nodes, config.degree);
  json summary = json::object();
  for (auto coupling : {Coupling::Decoupled, Coupling::Coupled}) {
    const auto field = propagate(ode, map, grid, coupling);
    surrogate_bands(field, map.basis(), 2000, "gpc-" + std::string(to_string(coupling)), table);
    double worst = 0.0;
    for (std::size_t k = 0; k < field.times.size(); ++k)
      worst = std::max(worst, std::abs(field.blocks[k](0, 0) - mc.mean(static_cast<Eigen::Index>(k), 0)));
    summary["max_mean_gap_" + std::string(to_string(coupling))] = worst;
  }
  return {{{"bands.csv", std::move(table)}}, summary};
}

Artifacts run_robust(const ExperimentConfig& config) {
  const auto outcome = solve_robust(config);
  const auto ocp = robust_ocp(config);

  CsvTable controls{{"k", "t", "u_baseline", "u_robust"}, {}};
  for (std::size_t k = 0; k < ocp.controls.node_count(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    controls.rows.push_back(
        {num(k), num(ocp.controls.node_time(k)), num(outcome.baseline[kk]), num(outcome.solution.controls[kk])});
  }

  const auto base_replay = replay_policy(config, outcome.baseline, config.mc_n);
  const auto robust_replay = replay_policy(config, outcome.solution.controls, config.mc_n);
  CsvTable trajectories{{"policy", "t", "state", "mean", "lower", "upper", "reference"}, {}};
  for (const auto* replay : {&base_replay, &robust_replay}) {
    const std::string policy = replay == &base_replay ? "baseline" : "robust";
    const auto m = ensemble_moments(replay->ensemble);
    for (std::size_t k = 0; k < m.times.size(); ++k) {
      const auto r = drivetrain::reference_trajectory(m.times[k]);
      for (Eigen::Index c = 0; c < 2; ++c) {
        const auto kk = static_cast<Eigen::Index>(k);
        trajectories.rows.push_back({policy, num(m.times[k]), num(static_cast<int>(c) + 1), num(m.mean(kk, c)),
                                     num(m.lower(kk, c)), num(m.upper(kk, c)), num(c == 0 ? r.angle : r.rate)});
      }
    }
  }

  CsvTable log{{"iteration", "evaluations", "cost", "pg_norm"}, {}};
  for (const auto& it : outcome.solution.log)
    log.rows.push_back({num(it.iteration), num(it.evaluations), num(it.value), num(it.pg_norm)});

  const double ratio = outcome.solution.cost / outcome.baseline_eval.cost;
  json summary{{"baseline_cost", outcome.baseline_eval.cost},
               {"baseline_breakdown", breakdown_json(outcome.baseline_eval.breakdown)},
               {"optimized_cost", outcome.solution.cost},
               {"optimized_breakdown", breakdown_json(outcome.optimized_eval.breakdown)},
               {"ratio", ratio},
               {"ratio_ok", ratio <= 0.2},
               {"iterations", outcome.solution.iterations},
               {"evaluations", outcome.solution.evaluations},
               {"stop_reason", to_string(outcome.solution.reason)},
               {"pg_norm", outcome.solution.pg_norm},
               {"baseline_replay_max_deviation", base_replay.max_deviation},
               {"robust_replay_max_deviation", robust_replay.max_deviation},
               {"robust_bifurcation_free", robust_replay.max_deviation < 2 * std::numbers::pi}};
  return {{{"robust_controls.csv", std::move(controls)},
           {"robust_trajectories.csv", std::move(trajectories)},
           {"robust_log.csv", std::move(log)}},
          summary};
}

}  // namespace

Artifacts run_experiment(const ExperimentConfig& config) {
  config.validate();
  Artifacts artifacts;
  switch (config.experiment) {
    case Experiment::Table1: artifacts = run_table1(config); break;
    case Experiment::Surfaces: artifacts = run_surfaces(config); break;
    case Experiment::Bands: artifacts = run_bands(config); break;
    case Experiment::Robust: artifacts = run_robust(config); break;
    case Experiment::Propagate: artifacts = run_propagate(config); break;
  }
  artifacts.summary["experiment"] = to_string(config.experiment);
  artifacts.summary["config"] = to_json(config);
  return artifacts;
}

void write_artifacts(const ExperimentConfig& config, const Artifacts& artifacts) {
  namespace fs = std::filesystem;
  const fs::path dir(config.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory '" + config.out + "': " + ec.message());
  for (const auto& [name, table] : artifacts.tables) {
    std::ofstream os(dir / name, std::ios::binary);
    if (!os) throw UsageError("cannot write " + (dir / name).string());
    write_csv(os, config, table);
  }
  std::ofstream os(dir / (std::string(to_string(config.experiment)) + "_summary.json"), std::ios::binary);
  os << artifacts.summary.dump(2) << '\n';
}

}  // namespace pcesocp::cli
