#include <fstream>
#include <ostream>

#include <CLI11.hpp>

#include "pcesocp/cli/experiments.hpp"

namespace pcesocp::cli {

namespace {

using nlohmann::json;

// Every flag is read as text and forwarded under its config key, so flags and
// the config file share one parser and one set of checks.
struct FlagSpec {
  const char* flag;
  const char* key;
  const char* help;
  enum Kind { Integer, Unsigned, Real, Text } kind;
};

constexpr FlagSpec kFlags[] = {
    {"--degree", "degree", "chaos order d", FlagSpec::Integer},
    {"--nodes", "nodes", "Gauss nodes q", FlagSpec::Unsigned},
    {"--estimator", "estimator", "pm | ls | gls", FlagSpec::Text},
    {"--coupling", "coupling", "decoupled | coupled", FlagSpec::Text},
    {"--scenario", "scenario", "step scenario 1 or 2 (table1: 0 = both)", FlagSpec::Integer},
    {"--dt", "dt", "RK4 step in seconds", FlagSpec::Real},
    {"--store-every", "store_every", "integrator steps per stored point", FlagSpec::Unsigned},
    {"--mc-n", "mc_n", "reference grid / Monte Carlo sample count", FlagSpec::Unsigned},
    {"--seed", "seed", "Monte Carlo seed", FlagSpec::Unsigned},
    {"--out", "out", "output directory", FlagSpec::Text},
    {"--spring-law", "spring_law", "elastic | printed", FlagSpec::Text},
    {"--output-every", "output_every", "stored points per surface time row", FlagSpec::Unsigned},
    {"--intervals", "intervals", "control intervals", FlagSpec::Unsigned},
    {"--epsilon", "epsilon", "tracking weight in (0, 1]", FlagSpec::Real},
    {"--u-lower", "u_lower", "lower torque bound", FlagSpec::Real},
    {"--u-upper", "u_upper", "upper torque bound", FlagSpec::Real},
    {"--max-iter", "max_iter", "optimizer iteration cap", FlagSpec::Unsigned},
    {"--threads", "threads", "gradient worker threads (0 = all cores)", FlagSpec::Unsigned},
};

json convert(const FlagSpec& spec, const std::string& text) {
  try {
    std::size_t used = 0;
    json value;
    switch (spec.kind) {
      case FlagSpec::Integer: value = std::stoi(text, &used); break;
      case FlagSpec::Unsigned:
        if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
        value = std::stoull(text, &used);
        break;
      case FlagSpec::Real: value = std::stod(text, &used); break;
      case FlagSpec::Text: return text;
    }
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return value;
  } catch (const std::exception&) {
    throw UsageError(std::string(spec.flag) + ": invalid value '" + text + "'");
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polynomial chaos propagation and robust optimal control of the eccentric drivetrain"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override it")->check(CLI::ExistingFile);
  std::vector<std::string> values(std::size(kFlags));
  std::vector<CLI::Option*> options;
  for (std::size_t i = 0; i < std::size(kFlags); ++i)
    options.push_back(app.add_option(kFlags[i].flag, values[i], kFlags[i].help));

  for (auto e : {Experiment::Table1, Experiment::Surfaces, Experiment::Bands, Experiment::Robust,
                 Experiment::Propagate})
    app.add_subcommand(std::string(to_string(e)));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    const auto experiment = parse_experiment(app.get_subcommands().front()->get_name());
    ExperimentConfig config = ExperimentConfig::defaults(experiment);
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      json file;
      try {
        file = json::parse(is);
      } catch (const json::exception& e) {
        throw UsageError("config file: " + std::string(e.what()));
      }
      merge_json(config, file);
    }
    json flags = json::object();
    for (std::size_t i = 0; i < options.size(); ++i)
      if (options[i]->count() > 0) flags[kFlags[i].key] = convert(kFlags[i], values[i]);
    merge_json(config, flags);
    config.validate();

    const Artifacts artifacts = run_experiment(config);
    write_artifacts(config, artifacts);
    out << artifacts.summary.dump() << '\n';
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace pcesocp::cli
