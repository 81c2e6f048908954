#include "rdsos/moments.hpp"

#include <algorithm>
#include <cmath>

#include "rdsos/spectral.hpp"

namespace rdsos {

CapViolation::CapViolation(const MultiIndex& index, const std::string& what)
    : std::out_of_range(what + ": index " + index.to_string() + " exceeds caps"), index_(index) {}

MissingMoment::MissingMoment(const MultiIndex& index)
    : std::out_of_range("missing moment for index " + index.to_string()), index_(index) {}

std::vector<int> VariableSet::coordinates(int harmonic) const {
  std::vector<int> ids;
  const std::size_t dim = real_dimension(cutoff);
  for (std::size_t id = 0; id < dim; ++id) {
    if (coord_mode(static_cast<int>(id)) <= harmonic) ids.push_back(static_cast<int>(id));
  }
  return ids;
}

std::size_t VariableSet::count(int harmonic) const {
  return coordinates(harmonic).size() + (time ? 1 : 0);
}

namespace {

// Depth-first over variables; `var` = -1 denotes time.
void enumerate_rec(const std::vector<int>& vars, std::size_t pos, int remaining,
                   int time_exp, std::vector<MultiIndex::Entry>& cur,
                   std::vector<MultiIndex>& out) {
  if (pos == vars.size()) {
    out.emplace_back(time_exp, cur);
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    if (vars[pos] < 0) {
      enumerate_rec(vars, pos + 1, remaining - e, e, cur, out);
    } else {
      if (e > 0) cur.emplace_back(vars[pos], e);
      enumerate_rec(vars, pos + 1, remaining - e, time_exp, cur, out);
      if (e > 0) cur.pop_back();
    }
  }
}

}  // namespace

std::vector<MultiIndex> enumerate_monomials(const VariableSet& vars, int degree, int harmonic) {
  if (degree < 0 || harmonic < 0) {
    throw std::invalid_argument("enumerate_monomials: degrees must be nonnegative");
  }
  std::vector<int> ids;
  if (vars.time) ids.push_back(-1);
  for (int id : vars.coordinates(harmonic)) ids.push_back(id);
  std::vector<MultiIndex> out;
  std::vector<MultiIndex::Entry> cur;
  enumerate_rec(ids, 0, degree, 0, cur, out);
  std::sort(out.begin(), out.end());
  return out;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

bool MomentCaps::admits(const MultiIndex& a) const {
  if (!time && a.time() != 0) return false;
  if (a.degree() > max_degree) return false;
  if (a.harmonic_degree() > max_harmonic) return false;
  return a.max_coordinate() < static_cast<int>(real_dimension(cutoff));
}

void MomentCaps::require(const MultiIndex& a) const {
  if (!admits(a)) throw CapViolation(a, "moment caps");
}

double MomentSequence::at(const MultiIndex& a) const {
  caps_.require(a);
  auto it = values_.find(a);
  if (it == values_.end()) throw MissingMoment(a);
  return it->second;
}

void MomentSequence::set(const MultiIndex& a, double v) {
  caps_.require(a);
  values_[a] = v;
}

MomentSequence MomentSequence::dirac(const MomentCaps& caps, double t, std::span<const double> x) {
  return filled(caps, [&](const MultiIndex& a) { return a.evaluate(t, x); });
}

double riesz(const Polynomial& p, const MomentSequence& m) {
  double v = 0.0;
  for (const auto& [a, c] : p.terms()) v += c * m.at(a);
  return v;
}

MatrixTemplate::MatrixTemplate(std::vector<MultiIndex> basis,
                               std::vector<std::vector<TemplateTerm>> upper)
    : basis_(std::move(basis)), upper_(std::move(upper)) {
  const std::size_t n = basis_.size();
  if (upper_.size() != n * (n + 1) / 2) {
    throw std::invalid_argument("MatrixTemplate: packed entry count does not match basis");
  }
}

std::size_t MatrixTemplate::packed(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  // Column-major upper triangle.
  return j * (j + 1) / 2 + i;
}

const std::vector<TemplateTerm>& MatrixTemplate::entry(std::size_t i, std::size_t j) const {
  return upper_.at(packed(i, j));
}

std::vector<MultiIndex> MatrixTemplate::referenced_indices() const {
  std::vector<MultiIndex> out;
  for (const auto& e : upper_) {
    for (const auto& t : e) out.push_back(t.index);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

MatrixTemplate localizing_matrix(const Polynomial& g, int order, const MomentCaps& caps) {
  if (order < 0) throw std::invalid_argument("localizing_matrix: negative order");
  auto basis = enumerate_monomials(caps.variables(), order, caps.max_harmonic);
  const std::size_t n = basis.size();
  std::vector<std::vector<TemplateTerm>> upper(n * (n + 1) / 2);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i <= j; ++i) {
      auto& entry = upper[j * (j + 1) / 2 + i];
      const MultiIndex ab = basis[i] * basis[j];
      for (const auto& [c, gc] : g.terms()) {
        MultiIndex idx = ab * c;
        if (!caps.admits(idx)) throw CapViolation(idx, "localizing matrix");
        entry.push_back({std::move(idx), gc});
      }
    }
  }
  return MatrixTemplate(std::move(basis), std::move(upper));
}

MatrixTemplate moment_matrix(int order, const MomentCaps& caps) {
  return localizing_matrix(Polynomial::constant(1.0), order, caps);
}

Eigen::MatrixXd evaluate_template(const MatrixTemplate& t, const MomentSequence& m) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      double v = 0.0;
      for (const auto& term : t.entry(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) {
        v += term.coef * m.at(term.index);
      }
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace rdsos
