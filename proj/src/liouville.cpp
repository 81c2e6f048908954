#include "rdsos/liouville.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "rdsos/moment_io.hpp"

namespace rdsos {

GaussianProduct isotropic_gaussian(std::size_t cutoff, double variance) {
  if (variance < 0.0) throw std::invalid_argument("isotropic_gaussian: negative variance");
  const std::size_t n = real_dimension(cutoff);
  return {std::vector<double>(n, 0.0), std::vector<double>(n, std::sqrt(variance))};
}

namespace {

void check_grid(const GridFunction& g, std::size_t cutoff, const char* what) {
  if (g.size() < 2 * cutoff + 1) {
    throw std::invalid_argument(std::string(what) + ": grid of " + std::to_string(g.size()) +
                                " points is too coarse for K=" + std::to_string(cutoff));
  }
}

struct SpecValidator {
  std::size_t cutoff;

  void operator()(const DiracAtFunction& d) const { check_grid(d.state, cutoff, "Dirac spec"); }

  void operator()(const GaussianProduct& g) const {
    const std::size_t n = real_dimension(cutoff);
    if (g.mean.size() != n || g.sigma.size() != n) {
      throw std::invalid_argument("Gaussian spec: expected " + std::to_string(n) +
                                  " means and sigmas");
    }
    for (double s : g.sigma) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("Gaussian spec: sigma must be >= 0");
    }
    for (double m : g.mean) {
      if (!std::isfinite(m)) throw std::invalid_argument("Gaussian spec: non-finite mean");
    }
  }

  void operator()(const Ensemble& e) const {
    if (e.members.empty() || e.members.size() != e.weights.size()) {
      throw std::invalid_argument("Ensemble spec: need one weight per member");
    }
    double total = 0.0;
    for (double w : e.weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("Ensemble spec: negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("Ensemble spec: weights must sum to 1");
    for (const auto& g : e.members) check_grid(g, cutoff, "Ensemble spec");
  }
};

}  // namespace

void validate_spec(const InitialMeasureSpec& spec, std::size_t cutoff) {
  std::visit(SpecValidator{cutoff}, spec);
}

double gaussian_moment(double mean, double sigma, int p) {
  if (p < 0) throw std::invalid_argument("gaussian_moment: negative order");
  // sum_j C(p, j) mean^{p-j} sigma^j E[Z^j], E[Z^j] = (j-1)!! for even j.
  double total = 0.0;
  double zmoment = 1.0;  // E[Z^j] for the current even j
  for (int j = 0; j <= p; j += 2) {
    if (j > 0) zmoment *= static_cast<double>(j - 1);
    total += binomial(p, j) * std::pow(mean, p - j) * std::pow(sigma, j) * zmoment;
  }
  return total;
}

MomentSequence initial_moments(const InitialMeasureSpec& spec, const MomentCaps& caps,
                               const std::vector<MultiIndex>& indices) {
  if (caps.time) throw std::invalid_argument("initial_moments: caps must not include time");
  validate_spec(spec, caps.cutoff);
  MomentSequence m(caps);
  if (const auto* g = std::get_if<GaussianProduct>(&spec)) {
    for (const auto& a : indices) {
      double v = 1.0;
      for (const auto& [id, e] : a.spatial()) {
        v *= gaussian_moment(g->mean.at(static_cast<std::size_t>(id)),
                             g->sigma.at(static_cast<std::size_t>(id)), e);
      }
      m.set(a, v);
    }
    return m;
  }
  std::vector<RealCoordinates> points;
  std::vector<double> weights;
  if (const auto* d = std::get_if<DiracAtFunction>(&spec)) {
    points.push_back(to_real(dft(d->state, caps.cutoff)));
    weights.push_back(1.0);
  } else {
    const auto& e = std::get<Ensemble>(spec);
    for (const auto& g : e.members) points.push_back(to_real(dft(g, caps.cutoff)));
    weights = e.weights;
  }
  for (const auto& a : indices) {
    double v = 0.0;
    for (std::size_t s = 0; s < points.size(); ++s) v += weights[s] * a.evaluate(0.0, points[s]);
    m.set(a, v);
  }
  return m;
}

MomentSequence initial_moments(const InitialMeasureSpec& spec, const MomentCaps& caps) {
  return initial_moments(spec, caps,
                         enumerate_monomials(caps.variables(), caps.max_degree, caps.max_harmonic));
}

MomentCaps constraint_occupation_caps(int order, int harmonic, std::size_t cutoff) {
  return {order + 1, harmonic, cutoff, true};
}

std::vector<MultiIndex> test_indices(int order, int harmonic, std::size_t cutoff) {
  if (order < 1) throw std::invalid_argument("test_indices: relaxation order must be >= 1");
  auto all = enumerate_monomials({true, cutoff}, order, harmonic);
  all.erase(all.begin());  // the constant test function
  return all;
}

LiouvilleConstraint assemble_constraint(const MultiIndex& a, const std::vector<Polynomial>& drift,
                                        const MomentCaps& occ_caps, const MomentSequence& initial) {
  LiouvilleConstraint c;
  c.test = a;
  c.terminal = a.without_time();
  std::map<MultiIndex, double> occ;
  auto add = [&](const MultiIndex& idx, double coef) {
    if (coef == 0.0) return;
    if (!occ_caps.admits(idx)) {
      ++c.truncated.count;
      c.truncated.mass += std::abs(coef);
      return;
    }
    occ[idx] -= coef;
  };
  // d/dt t^{a0} = a0 t^{a0 - 1}
  if (a.time() > 0) add(a.with_time(a.time() - 1), static_cast<double>(a.time()));
  // Frechet derivative: sum_j a_j x^{a - e_j} P_j(x)
  for (const auto& [id, e] : a.spatial()) {
    const auto base = a.lowered(id);
    const auto& p = drift.at(static_cast<std::size_t>(id));
    for (const auto& [b, coef] : p.terms()) add(*base * b, static_cast<double>(e) * coef);
  }
  for (const auto& [idx, v] : occ) {
    if (v != 0.0) c.occ_coeffs.push_back({idx, v});
  }
  c.rhs = a.time() == 0 ? initial.at(c.terminal) : 0.0;
  return c;
}

double residual(const LiouvilleConstraint& c, const MomentSequence& occ, const MomentSequence& term) {
  double v = c.terminal_coef * term.at(c.terminal) - c.rhs;
  for (const auto& t : c.occ_coeffs) v += t.coef * occ.at(t.index);
  return v;
}

std::size_t LiouvilleSystem::truncated_constraints() const {
  std::size_t n = 0;
  for (const auto& c : constraints) n += c.truncated.count > 0 ? 1 : 0;
  return n;
}

LiouvilleSystem assemble_system(int order, int harmonic, std::size_t cutoff, double eps,
                                const MomentSequence& initial) {
  if (harmonic < 0) throw std::invalid_argument("assemble_system: negative harmonic degree");
  LiouvilleSystem sys;
  sys.order = order;
  sys.harmonic = harmonic;
  sys.cutoff = cutoff;
  sys.eps = eps;
  sys.occ_caps = constraint_occupation_caps(order, harmonic, cutoff);
  sys.term_caps = {order, harmonic, cutoff, false};
  const auto dp = drift_polynomials(cutoff, eps);
  const auto tests = test_indices(order, harmonic, cutoff);
  sys.constraints.reserve(tests.size());
  for (const auto& a : tests) {
    auto c = assemble_constraint(a, dp, sys.occ_caps, initial);
    c.slack = sys.constraints.size();
    sys.constraints.push_back(std::move(c));
  }
  return sys;
}

nlohmann::json system_manifest(const LiouvilleSystem& sys) {
  nlohmann::json rows = nlohmann::json::array();
  std::size_t nnz = 0;
  for (const auto& c : sys.constraints) {
    nlohmann::json occ = nlohmann::json::array();
    for (const auto& t : c.occ_coeffs) {
      occ.push_back({{"a0", t.index.time()}, {"spatial", t.index.spatial_key()}, {"coef", t.coef}});
    }
    nnz += c.occ_coeffs.size();
    rows.push_back({{"test", {{"a0", c.test.time()}, {"spatial", c.test.spatial_key()}}},
                    {"occupation", std::move(occ)},
                    {"terminal", {{"spatial", c.terminal.spatial_key()}, {"coef", c.terminal_coef}}},
                    {"rhs", c.rhs},
                    {"slack", c.slack},
                    {"truncated", {{"count", c.truncated.count}, {"mass", c.truncated.mass}}}});
  }
  return {{"order", sys.order},
          {"harmonic", sys.harmonic},
          {"cutoff", sys.cutoff},
          {"eps", sys.eps},
          {"occupation_caps", caps_to_json(sys.occ_caps)},
          {"terminal_caps", caps_to_json(sys.term_caps)},
          {"counts",
           {{"constraints", sys.constraints.size()},
            {"occupation_nonzeros", nnz},
            {"truncated_constraints", sys.truncated_constraints()}}},
          {"constraints", std::move(rows)}};
}

}  // namespace rdsos
