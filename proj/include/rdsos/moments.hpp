#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdsos/polynomial.hpp"

namespace rdsos {

/// Thrown when an index falls outside the caps of a moment sequence.
class CapViolation : public std::out_of_range {
 public:
  explicit CapViolation(const MultiIndex& index, const std::string& what);
  const MultiIndex& index() const { return index_; }

 private:
  MultiIndex index_;
};

/// Thrown when a required moment is absent from a sequence.
class MissingMoment : public std::out_of_range {
 public:
  explicit MissingMoment(const MultiIndex& index);
  const MultiIndex& index() const { return index_; }

 private:
  MultiIndex index_;
};

/// Indeterminates: optional time plus the real Fourier coordinates u0..vK.
struct VariableSet {
  bool time = false;
  std::size_t cutoff = 0;

  /// Coordinate ids whose Fourier mode does not exceed `harmonic`.
  std::vector<int> coordinates(int harmonic) const;
  /// Number of indeterminates (time included) admitted at `harmonic`.
  std::size_t count(int harmonic) const;
};

/// All multi-indices of algebraic degree <= `degree` over the admitted
/// variables, in canonical (graded lexicographic) order.
std::vector<MultiIndex> enumerate_monomials(const VariableSet& vars, int degree, int harmonic);

/// Binomial coefficient as double; exact for the sizes used here.
double binomial(int n, int k);

struct MomentCaps {
  int max_degree = 0;
  int max_harmonic = 0;
  std::size_t cutoff = 0;
  bool time = false;

  bool admits(const MultiIndex& a) const;
  /// Throws CapViolation naming the offending index.
  void require(const MultiIndex& a) const;
  VariableSet variables() const { return {time, cutoff}; }

  friend bool operator==(const MomentCaps&, const MomentCaps&) = default;
};

/// Finite map index -> real, truncated by declared caps. Access outside the
/// caps throws CapViolation; access to an absent index throws MissingMoment.
class MomentSequence {
 public:
  using Map = std::map<MultiIndex, double>;

  MomentSequence() = default;
  explicit MomentSequence(MomentCaps caps) : caps_(caps) {}

  const MomentCaps& caps() const { return caps_; }
  const Map& entries() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool contains(const MultiIndex& a) const { return values_.count(a) != 0; }

  double at(const MultiIndex& a) const;
  void set(const MultiIndex& a, double v);

  /// Sequence of every index within caps, filled from `fn(index)`.
  template <typename Fn>
  static MomentSequence filled(const MomentCaps& caps, Fn&& fn) {
    MomentSequence m(caps);
    for (const auto& a : enumerate_monomials(caps.variables(), caps.max_degree, caps.max_harmonic)) {
      m.values_.emplace(a, fn(a));
    }
    return m;
  }

  /// Moments of the Dirac measure at (t, x).
  static MomentSequence dirac(const MomentCaps& caps, double t, std::span<const double> x);

 private:
  MomentCaps caps_;
  Map values_;
};

/// ell_m(p) = sum_a p_a m_a.
double riesz(const Polynomial& p, const MomentSequence& m);

struct TemplateTerm {
  MultiIndex index;
  double coef = 0.0;

  friend bool operator==(const TemplateTerm&, const TemplateTerm&) = default;
};

/// Symmetric matrix whose entries are linear combinations of moments.
class MatrixTemplate {
 public:
  MatrixTemplate(std::vector<MultiIndex> basis, std::vector<std::vector<TemplateTerm>> upper);

  std::size_t size() const { return basis_.size(); }
  const std::vector<MultiIndex>& basis() const { return basis_; }
  /// Entry (i, j); entry(i, j) and entry(j, i) are the same object.
  const std::vector<TemplateTerm>& entry(std::size_t i, std::size_t j) const;
  /// Sorted, deduplicated set of indices referenced by any entry.
  std::vector<MultiIndex> referenced_indices() const;

 private:
  std::size_t packed(std::size_t i, std::size_t j) const;

  std::vector<MultiIndex> basis_;
  std::vector<std::vector<TemplateTerm>> upper_;
};

/// Rows/cols indexed by monomials of degree <= order; entry (a, b) = m_{a+b}.
MatrixTemplate moment_matrix(int order, const MomentCaps& caps);

/// Entry (a, b) = sum_c g_c m_{a+b+c}.
MatrixTemplate localizing_matrix(const Polynomial& g, int order, const MomentCaps& caps);

Eigen::MatrixXd evaluate_template(const MatrixTemplate& t, const MomentSequence& m);

/// Smallest eigenvalue of a symmetric matrix (0 for an empty one).
double min_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace rdsos
