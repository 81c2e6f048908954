#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "rdsos/liouville.hpp"
#include "rdsos/oracle.hpp"
#include "rdsos/relaxation.hpp"

namespace rdsos {

/// Rejected configuration; `path` names the offending key ("problem.order").
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::invalid_argument(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct CompareConfig {
  double rel_tol = 1e-3;
  double floor = 1e-9;
  int max_degree = -1;  // -1: the relaxation order
  double min_occupation = 0.0;
  double min_terminal = 0.0;
};

struct ValidateConfig {
  std::size_t pairs = 10;
  std::size_t states = 10;
};

struct IoConfig {
  std::string out = "runs/default";
  bool sdpa = false;
  std::size_t trajectories = 1;
};

/// Everything one pipeline run depends on. The initial measure is kept in
/// its declarative form and realized on the oracle grid.
///
///   {"type": "gaussian", "variance": v}  or  {"mean": [...], "sigma": [...]}
///   {"type": "dirac", "constant": c | "coordinates": [u0, u1, v1, ...] | "values": [...]}
///   {"type": "ensemble", "members": [<dirac state>, ...], "weights": [...]}
struct RunConfig {
  RelaxationOptions problem;
  nlohmann::json initial = {{"type", "gaussian"}, {"variance", 0.1}};
  OracleOptions oracle;
  SolverOptions solver;
  CompareConfig compare;
  ValidateConfig validate;
  IoConfig io;

  InitialMeasureSpec initial_spec() const;
  int compare_degree() const { return compare.max_degree < 0 ? problem.order : compare.max_degree; }
};

/// Parses a config tree; absent keys keep their defaults, unknown keys are
/// rejected. Throws ConfigError.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

/// Checks every parameter against the preconditions of the modules it feeds.
/// Throws ConfigError.
void validate_config(const RunConfig& c);

}  // namespace rdsos
