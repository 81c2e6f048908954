#include "rdsos/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>
#include <variant>

namespace rdsos {

namespace {

using nlohmann::json;

// Reads typed keys from one object and rejects leftovers.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError(sub(key), "expected a boolean");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!it->is_number()) throw ConfigError(sub(key), "expected a number");
        if constexpr (std::is_integral_v<T>) {
          const double d = it->template get<double>();
          if (d != std::floor(d)) throw ConfigError(sub(key), "expected an integer");
          if constexpr (std::is_unsigned_v<T>) {
            if (d < 0) throw ConfigError(sub(key), "expected a non-negative integer");
          }
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ConfigError(sub(key), "expected a string");
      }
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(sub(key), e.what());
    }
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string sub(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(sub(k), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> number_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigError(path, "expected an array of numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

GridFunction state_from_json(const json& j, std::size_t grid, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const int given = static_cast<int>(j.contains("constant")) + static_cast<int>(j.contains("coordinates")) +
                    static_cast<int>(j.contains("values"));
  if (given != 1) throw ConfigError(path, "give exactly one of constant, coordinates, values");
  for (const auto& [k, v] : j.items()) {
    if (k != "constant" && k != "coordinates" && k != "values" && k != "type") throw ConfigError(path + "." + k, "unknown key");
  }
  if (j.contains("constant")) {
    if (!j["constant"].is_number()) throw ConfigError(path + ".constant", "expected a number");
    const double c = j["constant"].get<double>();
    return GridFunction(std::vector<double>(grid, c));
  }
  if (j.contains("values")) {
    auto v = number_array(j["values"], path + ".values");
    if (v.size() != grid) throw ConfigError(path + ".values", "length must equal oracle.grid");
    return GridFunction(std::move(v));
  }
  const auto x = number_array(j["coordinates"], path + ".coordinates");
  if (x.empty() || x.size() % 2 == 0) throw ConfigError(path + ".coordinates", "expected 2K + 1 real coordinates");
  const std::size_t k = (x.size() - 1) / 2;
  if (grid < 2 * k + 1) throw ConfigError(path + ".coordinates", "more modes than the oracle grid resolves");
  return idft(from_real(x), grid);
}

}  // namespace

InitialMeasureSpec RunConfig::initial_spec() const {
  const std::string path = "problem.initial";
  if (!initial.is_object() || !initial.contains("type") || !initial["type"].is_string()) {
    throw ConfigError(path + ".type", "expected one of gaussian, dirac, ensemble");
  }
  const auto type = initial["type"].get<std::string>();
  if (type == "gaussian") {
    for (const auto& [k, v] : initial.items()) {
      if (k != "type" && k != "variance" && k != "mean" && k != "sigma") throw ConfigError(path + "." + k, "unknown key");
    }
    if (initial.contains("variance")) {
      if (initial.contains("mean") || initial.contains("sigma")) {
        throw ConfigError(path, "variance excludes mean/sigma");
      }
      if (!initial["variance"].is_number() || !(initial["variance"].get<double>() >= 0.0)) {
        throw ConfigError(path + ".variance", "expected a number >= 0");
      }
      return isotropic_gaussian(problem.cutoff, initial["variance"].get<double>());
    }
    if (!initial.contains("mean") || !initial.contains("sigma")) throw ConfigError(path, "need variance or mean and sigma");
    return GaussianProduct{number_array(initial["mean"], path + ".mean"), number_array(initial["sigma"], path + ".sigma")};
  }
  if (type == "dirac") return DiracAtFunction{state_from_json(initial, oracle.grid, path)};
  if (type == "ensemble") {
    for (const auto& [k, v] : initial.items()) {
      if (k != "type" && k != "members" && k != "weights") throw ConfigError(path + "." + k, "unknown key");
    }
    if (!initial.contains("members") || !initial["members"].is_array() || initial["members"].empty()) {
      throw ConfigError(path + ".members", "expected a non-empty array");
    }
    Ensemble e;
    for (std::size_t i = 0; i < initial["members"].size(); ++i) {
      e.members.push_back(state_from_json(initial["members"][i], oracle.grid, path + ".members[" + std::to_string(i) + "]"));
    }
    if (initial.contains("weights")) {
      e.weights = number_array(initial["weights"], path + ".weights");
    } else {
      e.weights.assign(e.members.size(), 1.0 / static_cast<double>(e.members.size()));
    }
    return e;
  }
  throw ConfigError(path + ".type", "expected one of gaussian, dirac, ensemble");
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Section top(j, "config");
  if (const auto* p = top.raw("problem")) {
    Section s(*p, "problem");
    s.get("eps", c.problem.eps);
    s.get("cutoff", c.problem.cutoff);
    s.get("harmonic", c.problem.harmonic);
    s.get("order", c.problem.order);
    if (const auto* r = s.raw("radius"); r && !r->is_null()) {
      if (!r->is_number()) throw ConfigError("problem.radius", "expected a number or null");
      c.problem.radius = r->get<double>();
    }
    if (const auto* init = s.raw("initial")) c.initial = *init;
    s.finish();
  }
  if (const auto* p = top.raw("oracle")) {
    Section s(*p, "oracle");
    s.get("grid", c.oracle.grid);
    s.get("dt", c.oracle.dt);
    s.get("samples", c.oracle.samples);
    s.get("seed", c.oracle.seed);
    s.get("threads", c.oracle.threads);
    std::string q = to_string(c.oracle.quadrature), g = to_string(c.oracle.sampling);
    s.get("quadrature", q);
    s.get("sampling", g);
    try {
      c.oracle.quadrature = time_quadrature_from_string(q);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("oracle.quadrature", e.what());
    }
    try {
      c.oracle.sampling = gaussian_sampling_from_string(g);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("oracle.sampling", e.what());
    }
    s.finish();
  }
  if (const auto* p = top.raw("solver")) {
    Section s(*p, "solver");
    s.get("backend", c.solver.backend);
    s.get("max_iterations", c.solver.max_iterations);
    s.get("tol_rel", c.solver.tol_rel);
    s.get("tol_abs", c.solver.tol_abs);
    s.get("rho", c.solver.rho);
    s.get("over_relaxation", c.solver.over_relaxation);
    s.get("adaptive_rho", c.solver.adaptive_rho);
    s.get("check_every", c.solver.check_every);
    s.get("psd_tol", c.solver.psd_tol);
    s.get("verbose", c.solver.verbose);
    s.get("objective_scale", c.problem.objective_scale);
    s.get("ridge", c.problem.ridge);
    s.finish();
  }
  if (const auto* p = top.raw("compare")) {
    Section s(*p, "compare");
    s.get("rel_tol", c.compare.rel_tol);
    s.get("floor", c.compare.floor);
    s.get("max_degree", c.compare.max_degree);
    s.get("min_occupation", c.compare.min_occupation);
    s.get("min_terminal", c.compare.min_terminal);
    s.finish();
  }
  if (const auto* p = top.raw("validate")) {
    Section s(*p, "validate");
    s.get("pairs", c.validate.pairs);
    s.get("states", c.validate.states);
    s.finish();
  }
  if (const auto* p = top.raw("io")) {
    Section s(*p, "io");
    s.get("out", c.io.out);
    s.get("sdpa", c.io.sdpa);
    s.get("trajectories", c.io.trajectories);
    s.finish();
  }
  top.finish();
  return c;
}

json config_to_json(const RunConfig& c) {
  return {{"problem",
           {{"eps", c.problem.eps},
            {"cutoff", c.problem.cutoff},
            {"harmonic", c.problem.harmonic},
            {"order", c.problem.order},
            {"radius", c.problem.radius ? json(*c.problem.radius) : json(nullptr)},
            {"initial", c.initial}}},
          {"oracle",
           {{"grid", c.oracle.grid},
            {"dt", c.oracle.dt},
            {"samples", c.oracle.samples},
            {"seed", c.oracle.seed},
            {"threads", c.oracle.threads},
            {"quadrature", to_string(c.oracle.quadrature)},
            {"sampling", to_string(c.oracle.sampling)}}},
          {"solver",
           {{"backend", c.solver.backend},
            {"max_iterations", c.solver.max_iterations},
            {"tol_rel", c.solver.tol_rel},
            {"tol_abs", c.solver.tol_abs},
            {"rho", c.solver.rho},
            {"over_relaxation", c.solver.over_relaxation},
            {"adaptive_rho", c.solver.adaptive_rho},
            {"check_every", c.solver.check_every},
            {"psd_tol", c.solver.psd_tol},
            {"verbose", c.solver.verbose},
            {"objective_scale", c.problem.objective_scale},
            {"ridge", c.problem.ridge}}},
          {"compare",
           {{"rel_tol", c.compare.rel_tol},
            {"floor", c.compare.floor},
            {"max_degree", c.compare.max_degree},
            {"min_occupation", c.compare.min_occupation},
            {"min_terminal", c.compare.min_terminal}}},
          {"validate", {{"pairs", c.validate.pairs}, {"states", c.validate.states}}},
          {"io", {{"out", c.io.out}, {"sdpa", c.io.sdpa}, {"trajectories", c.io.trajectories}}}};
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("parse error: ") + e.what());
  }
  return config_from_json(j);
}

void validate_config(const RunConfig& c) {
  const auto& p = c.problem;
  if (p.order < 2) throw ConfigError("problem.order", "relaxation order must be >= 2");
  if (p.harmonic < 0) throw ConfigError("problem.harmonic", "must be >= 0");
  if (static_cast<std::size_t>(p.harmonic) > p.cutoff) throw ConfigError("problem.harmonic", "must not exceed the cutoff");
  if (!(p.eps >= 0.0) || !std::isfinite(p.eps)) throw ConfigError("problem.eps", "must be finite and >= 0");
  if (p.radius && !(*p.radius > 0.0)) throw ConfigError("problem.radius", "must be > 0");
  if (!(p.objective_scale > 0.0)) throw ConfigError("solver.objective_scale", "must be > 0");
  if (!(p.ridge >= 0.0)) throw ConfigError("solver.ridge", "must be >= 0");

  const auto& o = c.oracle;
  if (o.grid < 2 * p.cutoff + 1 || o.grid < 3) throw ConfigError("oracle.grid", "must be >= max(3, 2K + 1)");
  if (!(o.dt > 0.0) || !(o.dt <= 1.0)) throw ConfigError("oracle.dt", "must lie in (0, 1]");
  if (o.samples < 1) throw ConfigError("oracle.samples", "must be >= 1");

  const auto spec = c.initial_spec();
  try {
    validate_spec(spec, p.cutoff);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("problem.initial", e.what());
  }
  // Reaction stability on deterministic initial states.
  auto check_state = [&](const GridFunction& y, const std::string& path) {
    double amp = 1.0;
    for (double v : y.values()) amp = std::max(amp, std::abs(1.0 - 2.0 * v));
    const double h = 1.0 / static_cast<double>(step_count(1.0, o.dt));
    if (h * p.eps * amp > 1.0) throw ConfigError(path, "oracle.dt violates the reaction step bound");
  };
  if (const auto* d = std::get_if<DiracAtFunction>(&spec)) check_state(d->state, "problem.initial");
  if (const auto* e = std::get_if<Ensemble>(&spec)) {
    for (const auto& m : e->members) check_state(m, "problem.initial.members");
  }

  const auto& s = c.solver;
  const auto ids = available_backends();
  if (std::find(ids.begin(), ids.end(), s.backend) == ids.end()) throw ConfigError("solver.backend", "unknown backend '" + s.backend + "'");
  if (s.max_iterations < 1) throw ConfigError("solver.max_iterations", "must be >= 1");
  if (!(s.tol_rel >= 0.0) || !(s.tol_abs >= 0.0) || !(s.tol_rel + s.tol_abs > 0.0)) {
    throw ConfigError("solver.tol_rel", "tolerances must be >= 0 and not both zero");
  }
  if (!(s.rho > 0.0)) throw ConfigError("solver.rho", "must be > 0");
  if (!(s.over_relaxation > 0.0 && s.over_relaxation < 2.0)) throw ConfigError("solver.over_relaxation", "must lie in (0, 2)");
  if (s.check_every < 1) throw ConfigError("solver.check_every", "must be >= 1");
  if (!(s.psd_tol >= 0.0)) throw ConfigError("solver.psd_tol", "must be >= 0");

  const auto& m = c.compare;
  if (!(m.rel_tol > 0.0)) throw ConfigError("compare.rel_tol", "must be > 0");
  if (!(m.floor > 0.0)) throw ConfigError("compare.floor", "must be > 0");
  if (m.max_degree < -1 || m.max_degree == 0 || m.max_degree > 2 * moment_order(p.order)) {
    throw ConfigError("compare.max_degree", "must be -1 or in [1, 2s]");
  }
  if (!(m.min_occupation >= 0.0 && m.min_occupation <= 1.0)) throw ConfigError("compare.min_occupation", "must lie in [0, 1]");
  if (!(m.min_terminal >= 0.0 && m.min_terminal <= 1.0)) throw ConfigError("compare.min_terminal", "must lie in [0, 1]");

  if (c.io.out.empty()) throw ConfigError("io.out", "must not be empty");
}

}  // namespace rdsos
