#include "rdsos/relaxation.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "rdsos/moment_io.hpp"

namespace rdsos {

int moment_order(int relaxation_order) { return (relaxation_order + 2) / 2; }

namespace {

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

struct MaxRadius {
  std::size_t cutoff;
  double operator()(const DiracAtFunction& d) const {
    return 2.0 * squared_norm(to_real(dft(d.state, cutoff))) + 1.0;
  }
  double operator()(const GaussianProduct& g) const {
    double r2 = 1.0;
    for (std::size_t j = 0; j < g.mean.size(); ++j) r2 += g.mean[j] * g.mean[j] + 9.0 * g.sigma[j] * g.sigma[j];
    return r2;
  }
  double operator()(const Ensemble& e) const {
    double r2 = 1.0;
    for (const auto& m : e.members) r2 = std::max(r2, 2.0 * squared_norm(to_real(dft(m, cutoff))) + 1.0);
    return r2;
  }
};

using IndexMap = std::unordered_map<MultiIndex, std::size_t, MultiIndexHash>;

IndexMap make_index(const std::vector<MultiIndex>& vars, std::size_t offset) {
  IndexMap m;
  m.reserve(vars.size() * 2);
  for (std::size_t i = 0; i < vars.size(); ++i) m.emplace(vars[i], offset + i);
  return m;
}

PsdBlock to_block(std::string name, const MatrixTemplate& t, const IndexMap& index) {
  PsdBlock b;
  b.name = std::move(name);
  b.dim = t.size();
  for (std::size_t j = 0; j < t.size(); ++j) {
    for (std::size_t i = 0; i <= j; ++i) {
      for (const auto& term : t.entry(i, j)) {
        b.entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                             index.at(term.index), term.coef});
      }
    }
  }
  return b;
}

Polynomial ball_polynomial(double radius_squared, const MomentCaps& caps) {
  Polynomial g = Polynomial::constant(radius_squared);
  for (int id : caps.variables().coordinates(caps.max_harmonic)) {
    g.add_term(MultiIndex::coordinate(id, 2), -1.0);
  }
  return g;
}

}  // namespace

double default_radius_squared(const InitialMeasureSpec& spec, std::size_t cutoff) {
  validate_spec(spec, cutoff);
  return std::visit(MaxRadius{cutoff}, spec);
}

ConicProblem build_relaxation(const RelaxationOptions& opts, const InitialMeasureSpec& spec) {
  const int s = moment_order(opts.order);
  const MomentCaps init_caps{2 * s, opts.harmonic, opts.cutoff, false};
  if (opts.radius && !(*opts.radius > 0.0)) throw std::invalid_argument("build_relaxation: radius must be > 0");
  const double r2 = opts.radius ? *opts.radius * *opts.radius
                                : default_radius_squared(spec, opts.cutoff);
  return build_relaxation(opts, initial_moments(spec, init_caps), r2);
}

ConicProblem build_relaxation(const RelaxationOptions& opts, const MomentSequence& initial,
                              double radius_squared) {
  if (opts.order < 2) throw std::invalid_argument("build_relaxation: relaxation order must be >= 2");
  if (opts.harmonic < 0) throw std::invalid_argument("build_relaxation: negative harmonic degree");
  if (!(radius_squared > 0.0)) throw std::invalid_argument("build_relaxation: radius must be > 0");
  if (!(opts.eps >= 0.0)) throw std::invalid_argument("build_relaxation: eps must be >= 0");
  if (!(opts.objective_scale > 0.0) || opts.ridge < 0.0) {
    throw std::invalid_argument("build_relaxation: objective scale must be > 0 and ridge >= 0");
  }
  const auto& ic = initial.caps();
  if (ic.time || ic.cutoff != opts.cutoff || ic.max_degree < opts.order ||
      ic.max_harmonic < std::min<int>(opts.harmonic, static_cast<int>(opts.cutoff))) {
    throw std::invalid_argument("build_relaxation: initial moment caps are inconsistent with the relaxation");
  }

  ConicProblem p;
  p.options = opts;
  p.moment_order = moment_order(opts.order);
  p.radius_squared = radius_squared;
  const int s = p.moment_order;
  p.occ_caps = {2 * s, opts.harmonic, opts.cutoff, true};
  p.term_caps = {2 * s, opts.harmonic, opts.cutoff, false};
  p.occ_vars = enumerate_monomials(p.occ_caps.variables(), 2 * s, opts.harmonic);
  p.term_vars = enumerate_monomials(p.term_caps.variables(), 2 * s, opts.harmonic);
  const IndexMap occ_index = make_index(p.occ_vars, p.occ_offset());
  const IndexMap term_index = make_index(p.term_vars, p.term_offset());

  const LiouvilleSystem sys = assemble_system(opts.order, opts.harmonic, opts.cutoff, opts.eps, initial);
  p.num_slack = sys.constraints.size();
  p.num_liouville = sys.constraints.size();
  for (const auto& c : sys.constraints) {
    LinearRow row;
    for (const auto& t : c.occ_coeffs) row.coeffs.emplace_back(occ_index.at(t.index), t.coef);
    row.coeffs.emplace_back(term_index.at(c.terminal), c.terminal_coef);
    row.coeffs.emplace_back(p.slack_offset() + c.slack, -1.0);
    row.rhs = c.rhs;
    row.label = "liouville " + c.test.to_string();
    p.equalities.push_back(std::move(row));
    p.truncation.push_back(c.truncated);
  }
  p.equalities.push_back({{{occ_index.at(MultiIndex{}), 1.0}}, 1.0, "occupation mass"});
  p.equalities.push_back({{{term_index.at(MultiIndex{}), 1.0}}, 1.0, "terminal mass"});
  for (int j = 1; j <= 2 * s; ++j) {
    p.equalities.push_back({{{occ_index.at(MultiIndex::time_power(j)), 1.0}},
                            1.0 / static_cast<double>(j + 1),
                            "time marginal t^" + std::to_string(j)});
  }

  Polynomial time_window;
  time_window.add_term(MultiIndex::time_power(1), 1.0);
  time_window.add_term(MultiIndex::time_power(2), -1.0);
  p.blocks.push_back(to_block("occupation moment", moment_matrix(s, p.occ_caps), occ_index));
  p.blocks.push_back(to_block("occupation t(1-t)", localizing_matrix(time_window, s - 1, p.occ_caps), occ_index));
  p.blocks.push_back(to_block("occupation ball",
                              localizing_matrix(ball_polynomial(radius_squared, p.occ_caps), s - 1, p.occ_caps),
                              occ_index));
  p.blocks.push_back(to_block("terminal moment", moment_matrix(s, p.term_caps), term_index));
  p.blocks.push_back(to_block("terminal ball",
                              localizing_matrix(ball_polynomial(radius_squared, p.term_caps), s - 1, p.term_caps),
                              term_index));
  p.validate();
  return p;
}

void ConicProblem::validate() const {
  const std::size_t n = num_vars();
  for (const auto& row : equalities) {
    for (const auto& [v, c] : row.coeffs) {
      if (v >= n) throw std::logic_error("ConicProblem: row '" + row.label + "' references an undeclared variable");
    }
  }
  if (num_liouville > equalities.size() || num_liouville != num_slack) {
    throw std::logic_error("ConicProblem: Liouville row count does not match slack count");
  }
  for (const auto& b : blocks) {
    for (const auto& e : b.entries) {
      if (e.var >= num_moments()) throw std::logic_error("ConicProblem: block '" + b.name + "' references a non-moment variable");
      if (e.row > e.col || e.col >= b.dim) throw std::logic_error("ConicProblem: block '" + b.name + "' entry out of range");
    }
  }
}

nlohmann::json ConicProblem::manifest() const {
  nlohmann::json blocks_j = nlohmann::json::array();
  for (const auto& b : blocks) blocks_j.push_back({{"name", b.name}, {"dim", b.dim}, {"entries", b.entries.size()}});
  std::size_t truncated = 0;
  for (const auto& t : truncation) truncated += t.count > 0 ? 1 : 0;
  return {{"order", options.order},
          {"harmonic", options.harmonic},
          {"cutoff", options.cutoff},
          {"eps", options.eps},
          {"moment_order", moment_order},
          {"radius_squared", radius_squared},
          {"objective_scale", options.objective_scale},
          {"ridge", options.ridge},
          {"occupation_caps", caps_to_json(occ_caps)},
          {"terminal_caps", caps_to_json(term_caps)},
          {"variables",
           {{"occupation", occ_vars.size()},
            {"terminal", term_vars.size()},
            {"slack", num_slack},
            {"total", num_vars()}}},
          {"equalities", {{"total", equalities.size()}, {"liouville", num_liouville},
                          {"hard", equalities.size() - num_liouville},
                          {"truncated_liouville", truncated}}},
          {"blocks", std::move(blocks_j)}};
}

Eigen::VectorXd frozen_guess(const ConicProblem& p, const MomentSequence& initial) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.num_vars()));
  auto init = [&](const MultiIndex& a) {
    auto it = initial.entries().find(a.without_time());
    return it == initial.entries().end() ? 0.0 : it->second;
  };
  for (std::size_t i = 0; i < p.occ_vars.size(); ++i) {
    const auto& a = p.occ_vars[i];
    x[static_cast<Eigen::Index>(p.occ_offset() + i)] = init(a) / static_cast<double>(a.time() + 1);
  }
  for (std::size_t i = 0; i < p.term_vars.size(); ++i) {
    x[static_cast<Eigen::Index>(p.term_offset() + i)] = init(p.term_vars[i]);
  }
  for (std::size_t r = 0; r < p.num_liouville; ++r) {
    double e = -p.equalities[r].rhs;
    for (const auto& [v, c] : p.equalities[r].coeffs) {
      if (v < p.slack_offset()) e += c * x[static_cast<Eigen::Index>(v)];
    }
    x[static_cast<Eigen::Index>(p.slack_offset() + r)] = e;
  }
  return x;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kSolved: return "solved";
    case SolveStatus::kIterationLimit: return "iteration_limit";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kNumericalError: return "numerical_error";
  }
  return "unknown";
}

Eigen::MatrixXd block_matrix(const PsdBlock& b, const Eigen::VectorXd& x) {
  const auto n = static_cast<Eigen::Index>(b.dim);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : b.entries) m(e.row, e.col) += e.coef * x[static_cast<Eigen::Index>(e.var)];
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) m(j, i) = m(i, j);
  }
  return m;
}

SolveReport evaluate_point(const ConicProblem& p, const Eigen::VectorXd& x) {
  SolveReport rep;
  for (std::size_t r = 0; r < p.equalities.size(); ++r) {
    const auto& row = p.equalities[r];
    double v = -row.rhs;
    for (const auto& [var, c] : row.coeffs) {
      if (var < p.slack_offset()) v += c * x[static_cast<Eigen::Index>(var)];
    }
    if (r < p.num_liouville) {
      rep.objective += v * v;
      rep.max_residual = std::max(rep.max_residual, std::abs(v));
    } else {
      rep.max_hard_violation = std::max(rep.max_hard_violation, std::abs(v));
    }
  }
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& b : p.blocks) {
    rep.blocks.push_back({b.name, b.dim});
    const double ev = min_eigenvalue(block_matrix(b, x));
    rep.block_min_eigenvalues.push_back(ev);
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, ev);
  }
  rep.num_vars = p.num_vars();
  rep.num_occ = p.occ_vars.size();
  rep.num_term = p.term_vars.size();
  rep.num_equalities = p.equalities.size();
  rep.num_liouville = p.num_liouville;
  return rep;
}

std::pair<MomentSequence, MomentSequence> split_moments(const ConicProblem& p, const Eigen::VectorXd& x) {
  MomentSequence occ(p.occ_caps);
  MomentSequence term(p.term_caps);
  for (std::size_t i = 0; i < p.occ_vars.size(); ++i) occ.set(p.occ_vars[i], x[static_cast<Eigen::Index>(p.occ_offset() + i)]);
  for (std::size_t i = 0; i < p.term_vars.size(); ++i) term.set(p.term_vars[i], x[static_cast<Eigen::Index>(p.term_offset() + i)]);
  return {std::move(occ), std::move(term)};
}

Eigen::VectorXd pack_moments(const ConicProblem& p, const MomentSequence& occ, const MomentSequence& term) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.num_vars()));
  for (std::size_t i = 0; i < p.occ_vars.size(); ++i) x[static_cast<Eigen::Index>(p.occ_offset() + i)] = occ.at(p.occ_vars[i]);
  for (std::size_t i = 0; i < p.term_vars.size(); ++i) x[static_cast<Eigen::Index>(p.term_offset() + i)] = term.at(p.term_vars[i]);
  for (std::size_t r = 0; r < p.num_liouville; ++r) {
    double e = -p.equalities[r].rhs;
    for (const auto& [v, c] : p.equalities[r].coeffs) {
      if (v < p.slack_offset()) e += c * x[static_cast<Eigen::Index>(v)];
    }
    x[static_cast<Eigen::Index>(p.slack_offset() + r)] = e;
  }
  return x;
}

Solution solve(const ConicProblem& p, const SolverOptions& opts, const MomentSequence* initial) {
  const auto backend = make_backend(opts.backend);
  std::optional<Eigen::VectorXd> warm;
  if (initial != nullptr) warm = frozen_guess(p, *initial);
  const auto t0 = std::chrono::steady_clock::now();
  BackendResult br = backend->solve(p, opts, warm ? &*warm : nullptr);
  const auto t1 = std::chrono::steady_clock::now();

  Solution sol;
  sol.x = std::move(br.x);
  sol.report = evaluate_point(p, sol.x);
  sol.report.status = br.status;
  sol.report.iterations = br.iterations;
  sol.report.primal_residual = br.primal_residual;
  sol.report.dual_residual = br.dual_residual;
  sol.report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  sol.report.backend = backend->id();
  sol.report.solver = opts;
  sol.report.message = br.message;
  auto [occ, term] = split_moments(p, sol.x);
  sol.occupation = std::move(occ);
  sol.terminal = std::move(term);
  return sol;
}

nlohmann::json SolveReport::to_json() const {
  nlohmann::json blocks_j = nlohmann::json::array();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks_j.push_back({{"name", blocks[i].name},
                        {"dim", blocks[i].dim},
                        {"min_eigenvalue", i < block_min_eigenvalues.size() ? block_min_eigenvalues[i] : 0.0}});
  }
  return {{"status", to_string(status)},
          {"objective", objective},
          {"max_residual", max_residual},
          {"max_hard_violation", max_hard_violation},
          {"min_eigenvalue", min_eigenvalue},
          {"blocks", std::move(blocks_j)},
          {"dimensions",
           {{"variables", num_vars},
            {"occupation_moments", num_occ},
            {"terminal_moments", num_term},
            {"equalities", num_equalities},
            {"liouville_equalities", num_liouville}}},
          {"iterations", iterations},
          {"primal_residual", primal_residual},
          {"dual_residual", dual_residual},
          {"wall_seconds", wall_seconds},
          {"backend", backend},
          {"tolerances",
           {{"tol_rel", solver.tol_rel},
            {"tol_abs", solver.tol_abs},
            {"max_iterations", solver.max_iterations},
            {"rho", solver.rho},
            {"over_relaxation", solver.over_relaxation},
            {"psd_tol", solver.psd_tol}}},
          {"message", message}};
}

}  // namespace rdsos
