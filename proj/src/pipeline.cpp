#include "rdsos/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rdsos/moment_io.hpp"

namespace rdsos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kBandTol = 1e-8;
constexpr double kContractionTol = 1e-4;

struct Stage {
  const RunConfig& cfg;
  std::string name;
  fs::path dir;
  std::vector<std::string> files;

  Stage(const RunConfig& c, std::string n) : cfg(c), name(std::move(n)), dir(fs::path(c.io.out) / name) {
    fs::create_directories(dir);
  }

  std::string path(const std::string& file) {
    files.push_back(name + "/" + file);
    return (dir / file).string();
  }

  void write_json(const std::string& file, const json& j) { write_file_atomic(path(file), j.dump(2) + "\n"); }
  void write_moments(const std::string& file, const MomentSequence& m) { save_moments(m, path(file)); }

  // Config copy and manifest entry; returns the result for chaining.
  CommandResult finish(CommandResult r) {
    const fs::path root(cfg.io.out);
    write_file_atomic((root / "config.json").string(), config_to_json(cfg).dump(2) + "\n");
    json manifest = {{"tool", "rdsos"}, {"version", kVersion}, {"stages", json::object()}};
    const auto mpath = root / "manifest.json";
    if (fs::exists(mpath)) {
      std::ifstream in(mpath);
      try {
        manifest = json::parse(in);
      } catch (const json::exception&) {
        // Rebuilt below from this stage only.
      }
    }
    manifest["tool"] = "rdsos";
    manifest["version"] = kVersion;
    manifest["stages"][name] = {{"exit_code", r.exit_code}, {"files", files}};
    write_file_atomic(mpath.string(), manifest.dump(2) + "\n");
    return r;
  }
};

double radius_squared(const RunConfig& c, const InitialMeasureSpec& spec) {
  return c.problem.radius ? *c.problem.radius * *c.problem.radius : default_radius_squared(spec, c.problem.cutoff);
}

MomentSequence relaxation_initial(const RelaxationOptions& o, const InitialMeasureSpec& spec) {
  return initial_moments(spec, {2 * moment_order(o.order), o.harmonic, o.cutoff, false});
}

MomentSequence restrict_degree(const MomentSequence& m, int d) {
  MomentSequence out(m.caps());
  for (const auto& [a, v] : m.entries()) {
    if (a.degree() <= d) out.set(a, v);
  }
  return out;
}

bool in_band(const GridFunction& y) {
  return std::all_of(y.values().begin(), y.values().end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

// Smallest eigenvalue of the largest moment matrix the sequence supports.
double moment_matrix_min_eig(const MomentSequence& m) {
  const int order = m.caps().max_degree / 2;
  return min_eigenvalue(evaluate_template(moment_matrix(order, m.caps()), m));
}

json check(const std::string& name, bool passed, json detail) {
  return {{"name", name}, {"passed", passed}, {"detail", std::move(detail)}};
}

// Random in-set test state; even ids are smooth, odd ids are rough.
GridFunction test_state(const RunConfig& c, std::size_t id, std::uint64_t stream) {
  const std::uint64_t seed = c.oracle.seed * 0x9E3779B97F4A7C15ULL + stream * 1000003ULL + id;
  return random_in_set_state(c.oracle.grid, id % 2 == 0 ? 3 : 0, seed);
}

// Crank-Nicolson keeps the discrete maximum principle only for dt <= dx^2,
// so rough states are stepped on that scale.
double step_for(const RunConfig& c, std::size_t id) {
  const double dx = 1.0 / static_cast<double>(c.oracle.grid);
  return id % 2 == 0 ? c.oracle.dt : std::min(c.oracle.dt, dx * dx);
}

}  // namespace

CommandResult cmd_simulate(const RunConfig& c) {
  Stage st(c, "simulate");
  const auto spec = c.initial_spec();
  const auto ws = initial_states(spec, c.problem.cutoff, c.oracle);
  const std::size_t n = std::min(c.io.trajectories, ws.states.size());
  json runs = json::array();
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto traj = fd_solve(ws.states[i], c.problem.eps, c.oracle.dt);
    char name[64];
    std::snprintf(name, sizeof name, "trajectory_%03zu.csv", i);
    std::ostringstream os;
    write_trajectory_csv(traj, os);
    write_file_atomic(st.path(name), os.str());
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& s : traj.states) {
      for (double v : s.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    json r = {{"file", name},
              {"weight", ws.weights[i]},
              {"min", lo},
              {"max", hi},
              {"initial_norm", l2_norm(traj.states.front().values())},
              {"final_norm", l2_norm(traj.states.back().values())}};
    if (in_band(ws.states[i])) {
      const bool inv = lo >= -kBandTol && hi <= 1.0 + kBandTol;
      r["invariance"] = inv;
      ok = ok && inv;
    }
    runs.push_back(std::move(r));
  }
  json summary = {{"stage", "simulate"},
                  {"grid", c.oracle.grid},
                  {"dt", c.oracle.dt},
                  {"eps", c.problem.eps},
                  {"states_available", ws.states.size()},
                  {"trajectories", std::move(runs)}};
  st.write_json("report.json", summary);
  return st.finish({ok ? kExitOk : kExitContract, summary});
}

CommandResult cmd_moments(const RunConfig& c) {
  Stage st(c, "moments");
  const auto& p = c.problem;
  const auto spec = c.initial_spec();
  const int d = c.compare_degree();
  const auto init = relaxation_initial(p, spec);
  const MomentCaps occ{d, p.harmonic, p.cutoff, true}, term{d, p.harmonic, p.cutoff, false};
  const auto em = pushforward_moments(spec, occ, term, p.eps, c.oracle);
  st.write_moments("initial.csv", init);
  st.write_moments("occupation.csv", em.occ);
  st.write_moments("terminal.csv", em.term);
  if (!em.occ_stderr.entries().empty()) {
    st.write_moments("occupation_stderr.csv", em.occ_stderr);
    st.write_moments("terminal_stderr.csv", em.term_stderr);
  }
  const double mass_err = std::max(std::abs(em.occ.at(MultiIndex()) - 1.0), std::abs(em.term.at(MultiIndex()) - 1.0));
  const double occ_eig = moment_matrix_min_eig(em.occ), term_eig = moment_matrix_min_eig(em.term);
  const bool ok = mass_err <= 1e-9 && occ_eig >= -1e-9 && term_eig >= -1e-9;
  json summary = {{"stage", "moments"},
                  {"samples", em.samples},
                  {"sampling", em.sampling},
                  {"quadrature", em.quadrature},
                  {"seed", em.seed},
                  {"max_degree", d},
                  {"occupation_moments", em.occ.size()},
                  {"terminal_moments", em.term.size()},
                  {"initial_moments", init.size()},
                  {"mass_error", mass_err},
                  {"occupation_min_eigenvalue", occ_eig},
                  {"terminal_min_eigenvalue", term_eig}};
  st.write_json("report.json", summary);
  return st.finish({ok ? kExitOk : kExitContract, summary});
}

CommandResult cmd_assemble(const RunConfig& c) {
  Stage st(c, "assemble");
  const auto& p = c.problem;
  const auto spec = c.initial_spec();
  const auto init = relaxation_initial(p, spec);
  const auto sys = assemble_system(p.order, p.harmonic, p.cutoff, p.eps, init);
  const auto prob = build_relaxation(p, init, radius_squared(c, spec));
  st.write_json("constraints.json", system_manifest(sys));
  st.write_json("problem.json", prob.manifest());
  if (c.io.sdpa) export_sdpa(prob, st.path("problem.dat-s"));
  json summary = {{"stage", "assemble"},
                  {"constraints", sys.constraints.size()},
                  {"truncated_constraints", sys.truncated_constraints()},
                  {"variables", prob.num_vars()},
                  {"equalities", prob.equalities.size()},
                  {"radius_squared", prob.radius_squared},
                  {"blocks", prob.manifest()["blocks"]},
                  {"sdpa", c.io.sdpa}};
  st.write_json("report.json", summary);
  return st.finish({kExitOk, summary});
}

CommandResult cmd_solve(const RunConfig& c) {
  Stage st(c, "solve");
  const auto& p = c.problem;
  const auto spec = c.initial_spec();
  const auto init = relaxation_initial(p, spec);
  const auto prob = build_relaxation(p, init, radius_squared(c, spec));
  const auto sol = solve(prob, c.solver, &init);
  st.write_moments("occupation.csv", sol.occupation);
  st.write_moments("terminal.csv", sol.terminal);
  json summary = sol.report.to_json();
  summary["stage"] = "solve";
  summary["radius_squared"] = prob.radius_squared;
  summary["moment_order"] = prob.moment_order;
  st.write_json("report.json", summary);
  int code = kExitOk;
  if (sol.report.status != SolveStatus::kSolved) {
    code = kExitNonConvergence;
  } else if (sol.report.min_eigenvalue < -c.solver.psd_tol) {
    code = kExitContract;
  }
  return st.finish({code, summary});
}

CommandResult cmd_compare(const RunConfig& c, const std::string& computed, const std::string& reference) {
  const fs::path root(c.io.out);
  const fs::path cdir = computed.empty() ? root / "solve" : fs::path(computed);
  const fs::path rdir = reference.empty() ? root / "moments" : fs::path(reference);
  const auto load = [](const fs::path& dir, const char* file) { return load_moments((dir / file).string()); };
  const auto co = load(cdir, "occupation.csv"), ct = load(cdir, "terminal.csv");
  const int d = c.compare_degree();
  const auto ro = restrict_degree(load(rdir, "occupation.csv"), d);
  const auto rt = restrict_degree(load(rdir, "terminal.csv"), d);
  Stage st(c, "compare");
  const auto mo = compare_moments(co, ro, c.compare.rel_tol, c.compare.floor);
  const auto mt = compare_moments(ct, rt, c.compare.rel_tol, c.compare.floor);
  const bool ok = mo.fraction >= c.compare.min_occupation && mt.fraction >= c.compare.min_terminal;
  json summary = {{"stage", "compare"},
                  {"computed", cdir.string()},
                  {"reference", rdir.string()},
                  {"max_degree", d},
                  {"occupation", mo.to_json()},
                  {"terminal", mt.to_json()},
                  {"min_occupation", c.compare.min_occupation},
                  {"min_terminal", c.compare.min_terminal},
                  {"passed", ok}};
  st.write_json("report.json", summary);
  return st.finish({ok ? kExitOk : kExitContract, summary});
}

CommandResult cmd_validate(const RunConfig& c) {
  Stage st(c, "validate");
  const double eps = c.problem.eps;
  const std::size_t n = c.oracle.grid;
  json checks = json::array();

  {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < c.validate.states; ++i) {
      const auto [l, h] = invariance_check(fd_solve(test_state(c, i, 1), eps, step_for(c, i)));
      lo = std::min(lo, l);
      hi = std::max(hi, h);
    }
    checks.push_back(check("invariance", lo >= -kBandTol && hi <= 1.0 + kBandTol,
                           {{"states", c.validate.states}, {"min", lo}, {"max", hi}, {"tol", kBandTol}}));
  }
  {
    const auto mode = GridFunction::sample(n, [](double x) { return std::cos(2 * std::numbers::pi * x); });
    const auto r = dissipativity_check(mode, c.oracle.dt);
    const double h = 1.0 / static_cast<double>(r.norms.size() - 1);
    double decay_err = 0.0;
    for (std::size_t q = 0; q < r.norms.size(); ++q) {
      const double t = static_cast<double>(q) * h;
      decay_err = std::max(decay_err, std::abs(r.norms[q] - r.norms[0] * std::exp(-4 * std::numbers::pi * std::numbers::pi * t)));
    }
    double worst = r.max_increase;
    for (std::size_t i = 0; i < c.validate.states; ++i) {
      worst = std::max(worst, dissipativity_check(test_state(c, i, 2), step_for(c, i)).max_increase);
    }
    checks.push_back(check("dissipativity", worst <= 1e-10 && decay_err <= 1e-4,
                           {{"max_increase", worst}, {"mode_decay_error", decay_err}}));
  }
  {
    double worst = 0.0;
    for (double e : {0.0, 0.1, 1.0}) {
      for (std::size_t i = 0; i < c.validate.pairs; ++i) {
        const auto y1 = test_state(c, 2 * i, 3), y2 = test_state(c, 2 * i + 1, 3);
        worst = std::max(worst, contraction_check(y1, y2, e, step_for(c, 1)));
      }
    }
    checks.push_back(check("contraction", worst <= 1.0 + kContractionTol,
                           {{"pairs", c.validate.pairs}, {"eps", {0.0, 0.1, 1.0}}, {"max_ratio", worst}}));
  }
  {
    RelaxationOptions o = c.problem;
    o.cutoff = std::min<std::size_t>(o.cutoff, 1);
    o.harmonic = std::min(o.harmonic, static_cast<int>(o.cutoff));
    o.radius.reset();
    double worst_obj = 0.0, worst_dev = 0.0;
    bool solved = true;
    for (double level : {0.0, 1.0}) {
      const DiracAtFunction spec{GridFunction(std::vector<double>(n, level))};
      const auto init = relaxation_initial(o, spec);
      const auto sol = solve(build_relaxation(o, init, default_radius_squared(spec, o.cutoff)), c.solver, &init);
      solved = solved && sol.report.status == SolveStatus::kSolved;
      worst_obj = std::max(worst_obj, sol.report.objective);
      std::vector<double> xe(real_dimension(o.cutoff), 0.0);
      xe[0] = level;
      for (const auto* m : {&sol.occupation, &sol.terminal}) {
        for (const auto& [a, v] : m->entries()) {
          const double exact = a.without_time().evaluate(0.0, xe) / (m == &sol.occupation ? a.time() + 1 : 1);
          worst_dev = std::max(worst_dev, std::abs(v - exact));
        }
      }
    }
    checks.push_back(check("equilibrium", solved && worst_obj <= 1e-8 && worst_dev <= 1e-6,
                           {{"objective", worst_obj}, {"max_deviation", worst_dev}, {"cutoff", o.cutoff}}));
  }
  {
    RelaxationOptions o = c.problem;
    o.cutoff = 0;
    o.harmonic = 0;
    o.radius.reset();
    const DiracAtFunction spec{GridFunction(std::vector<double>(n, 0.5))};
    const auto init = relaxation_initial(o, spec);
    const auto sol = solve(build_relaxation(o, init, default_radius_squared(spec, 0)), c.solver, &init);
    const int d = o.order;
    const auto [lo, lt] = logistic_moments(0.5, eps, {d, 0, 0, true}, {d, 0, 0, false});
    const auto mo = compare_moments(sol.occupation, lo, 1e-3), mt = compare_moments(sol.terminal, lt, 1e-3);
    const double frac = static_cast<double>(mo.matched + mt.matched) / static_cast<double>(mo.shared + mt.shared);
    checks.push_back(check("nogap", sol.report.status == SolveStatus::kSolved && frac >= 0.95,
                           {{"fraction", frac}, {"occupation", mo.to_json()}, {"terminal", mt.to_json()}}));
    checks.push_back(check("solved_psd", sol.report.min_eigenvalue >= -1e-6,
                           {{"min_eigenvalue", sol.report.min_eigenvalue}}));
  }
  {
    const std::size_t k = std::min<std::size_t>(c.problem.cutoff, 1);
    OracleOptions oo = c.oracle;
    oo.samples = 64;
    oo.sampling = GaussianSampling::kMonteCarlo;
    const auto em = pushforward_moments(isotropic_gaussian(k, 0.1), {4, static_cast<int>(k), k, true},
                                        {4, static_cast<int>(k), k, false}, eps, oo);
    const double e1 = moment_matrix_min_eig(em.occ), e2 = moment_matrix_min_eig(em.term);
    checks.push_back(check("empirical_psd", std::min(e1, e2) >= -1e-9,
                           {{"occupation_min_eigenvalue", e1}, {"terminal_min_eigenvalue", e2}}));
  }
  {
    RelaxationOptions o = c.problem;
    o.order = 2;
    o.cutoff = std::min<std::size_t>(o.cutoff, 1);
    o.harmonic = static_cast<int>(o.cutoff);
    const auto prob = build_relaxation(o, isotropic_gaussian(o.cutoff, 0.1));
    std::ostringstream a, b;
    write_sdpa(to_sdpa(prob), a);
    std::istringstream in(a.str());
    write_sdpa(read_sdpa(in), b);
    checks.push_back(check("sdpa_roundtrip", a.str() == b.str(), {{"bytes", a.str().size()}}));
  }

  bool ok = true;
  for (const auto& ch : checks) ok = ok && ch["passed"].get<bool>();
  json summary = {{"stage", "validate"}, {"passed", ok}, {"checks", std::move(checks)}};
  st.write_json("report.json", summary);
  return st.finish({ok ? kExitOk : kExitContract, summary});
}

CommandResult cmd_report(const RunConfig& c) {
  const fs::path root(c.io.out);
  json stages = json::object();
  for (const char* name : {"simulate", "moments", "assemble", "solve", "compare", "validate"}) {
    const auto f = root / name / "report.json";
    if (!fs::exists(f)) continue;
    std::ifstream in(f);
    stages[name] = json::parse(in);
  }
  Stage st(c, "report");
  std::ostringstream md;
  md << "# rdsos run report\n\n";
  md << "eps = " << c.problem.eps << ", K = " << c.problem.cutoff << ", h = " << c.problem.harmonic
     << ", r = " << c.problem.order << "\n\n";
  if (stages.empty()) md << "No stage reports found under " << root.string() << ".\n";
  if (stages.contains("solve")) {
    const auto& s = stages["solve"];
    md << "## solve\n\nstatus " << s["status"].get<std::string>() << ", objective " << s["objective"].dump()
       << ", max residual " << s["max_residual"].dump() << ", iterations " << s["iterations"].dump()
       << ", min eigenvalue " << s["min_eigenvalue"].dump() << "\n\n";
  }
  if (stages.contains("compare")) {
    const auto& s = stages["compare"];
    md << "## compare\n\nrelative tolerance " << s["occupation"]["rel_tol"].dump() << ", degree <= "
       << s["max_degree"].dump() << "\n\n"
       << "| block | matched | shared | fraction |\n|---|---|---|---|\n";
    for (const char* b : {"occupation", "terminal"}) {
      md << "| " << b << " | " << s[b]["matched"].dump() << " | " << s[b]["shared"].dump() << " | "
         << s[b]["fraction"].dump() << " |\n";
    }
    md << "\n";
  }
  if (stages.contains("validate")) {
    md << "## validate\n\n";
    for (const auto& ch : stages["validate"]["checks"]) {
      md << "- " << ch["name"].get<std::string>() << ": " << (ch["passed"].get<bool>() ? "pass" : "FAIL") << "\n";
    }
    md << "\n";
  }
  json summary = {{"stage", "report"}, {"stages", stages}};
  st.write_json("report.json", summary);
  write_file_atomic(st.path("report.md"), md.str());
  summary["markdown"] = md.str();
  return st.finish({kExitOk, summary});
}

}  // namespace rdsos
