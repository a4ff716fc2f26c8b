#pragma once

// Drivetrain experiments behind the command-line tool: configuration, the
// computations themselves, and CSV/JSON artifact writing. Kept as a library so
// tests and the acceptance suite run exactly what the tool runs.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pcesocp/drivetrain.hpp"
#include "pcesocp/errors.hpp"
#include "pcesocp/estimation.hpp"
#include "pcesocp/mc.hpp"
#include "pcesocp/propagation.hpp"
#include "pcesocp/socp.hpp"

namespace pcesocp::cli {

/// Bad flags or configuration; the tool exits with status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Experiment { Table1, Surfaces, Bands, Robust, Propagate };
Experiment parse_experiment(std::string_view name);
std::string_view to_string(Experiment experiment);

struct ExperimentConfig {
  Experiment experiment = Experiment::Propagate;
  int degree = 4;
  std::size_t nodes = 5;
  EstimatorKind estimator = EstimatorKind::Projection;
  Coupling coupling = Coupling::Decoupled;
  int scenario = 2;  // table1 accepts 0 for both
  double dt = 1e-3;
  std::size_t store_every = 10;
  /// Reference / Monte Carlo sample count and seed.
  std::size_t mc_n = 500;
  std::uint64_t seed = 0;
  std::string out = "out";
  drivetrain::SpringLaw spring_law = drivetrain::SpringLaw::Elastic;
  /// Stored time points per surface row block (surfaces only).
  std::size_t output_every = 10;
  // robust start-up
  std::size_t intervals = 40;
  double epsilon = 0.4;
  double u_lower = -5.0;
  double u_upper = 5.0;
  std::size_t max_iter = 200;
  std::size_t threads = 0;

  static ExperimentConfig defaults(Experiment experiment);
  /// Throws UsageError.
  void validate() const;

  double horizon() const { return 10.0; }
  TimeGrid time_grid() const;
  drivetrain::Params params() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Overwrites the fields present in `j`; unknown keys and ill-typed values are
/// usage errors.
void merge_json(ExperimentConfig& config, const nlohmann::json& j);

/// Shortest decimal that round-trips to the same double.
std::string format_number(double value);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

/// '#' + one-line JSON config, the header row, then the rows.
void write_csv(std::ostream& os, const ExperimentConfig& config, const CsvTable& table);

struct Artifacts {
  /// File name (inside config.out) and contents.
  std::vector<std::pair<std::string, CsvTable>> tables;
  nlohmann::json summary;
};

Artifacts run_experiment(const ExperimentConfig& config);
/// Creates config.out and writes every table plus <experiment>_summary.json.
void write_artifacts(const ExperimentConfig& config, const Artifacts& artifacts);

// Building blocks shared with the acceptance suite.

/// Trajectories of the scenario on an endpoint-inclusive grid of `points` rest
/// angles.
ReferenceSurface drivetrain_reference(int scenario, std::size_t points, const TimeGrid& grid,
                                      const drivetrain::Params& params);

/// RMSE of the first state for one cell of the table1 sweep. LS uses the Gauss nodes
/// without their weights.
double table1_rmse(int scenario, EstimatorKind method, Coupling coupling, std::size_t q, int d,
                   const TimeGrid& grid, const ReferenceSurface& reference, const drivetrain::Params& params);

/// Robust start-up problem: state (theta, theta_dot), tracking (r1, r1').
StochasticOcp robust_ocp(const ExperimentConfig& config);

/// Computed-torque feedforward sampled at the control nodes, clipped to the bounds.
Eigen::VectorXd computed_torque_controls(const ControlGrid& grid, const drivetrain::Params& params);

struct ReplayStats {
  /// max over omega of |theta(T) - r1(T)|.
  double max_deviation = 0.0;
  std::size_t diverged = 0;
  SampleEnsemble ensemble;
};

/// Simulates the policy on the `points`-point rest-angle grid.
ReplayStats replay_policy(const ExperimentConfig& config, const Eigen::VectorXd& controls, std::size_t points);

struct RobustOutcome {
  Eigen::VectorXd baseline;
  OcpEvaluation baseline_eval;
  OcpSolution solution;
  OcpEvaluation optimized_eval;
};

RobustOutcome solve_robust(const ExperimentConfig& config);

/// Parses argv, runs, writes artifacts; returns the exit status
/// (0 ok, 2 usage, 3 numerical failure).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pcesocp::cli
