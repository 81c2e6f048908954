#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "json.hpp"
#include "rdsos/moments.hpp"
#include "rdsos/spectral.hpp"

namespace rdsos {

/// mu_0 = delta at a single initial state.
struct DiracAtFunction {
  GridFunction state;
};

/// Independent normal laws on the real coordinates (u0, u1, v1, ...).
/// sigma = 0 makes that coordinate an exact Dirac factor. Unretained modes
/// carry no mass (Dirac at zero).
struct GaussianProduct {
  std::vector<double> mean;
  std::vector<double> sigma;
};

/// Finite weighted ensemble of initial states.
struct Ensemble {
  std::vector<GridFunction> members;
  std::vector<double> weights;
};

using InitialMeasureSpec = std::variant<DiracAtFunction, GaussianProduct, Ensemble>;

/// Mean-zero product Gaussian with the same variance on every retained
/// coordinate.
GaussianProduct isotropic_gaussian(std::size_t cutoff, double variance);

/// Throws std::invalid_argument if the spec is inconsistent with the cutoff
/// (negative sigma, weights not summing to one, under-resolved grids, ...).
void validate_spec(const InitialMeasureSpec& spec, std::size_t cutoff);

/// E[(mean + sigma Z)^p] for standard normal Z.
double gaussian_moment(double mean, double sigma, int p);

/// Initial moments m^0 on every index admitted by `caps` (time must be off).
MomentSequence initial_moments(const InitialMeasureSpec& spec, const MomentCaps& caps);
/// Same, restricted to an explicit index list.
MomentSequence initial_moments(const InitialMeasureSpec& spec, const MomentCaps& caps,
                               const std::vector<MultiIndex>& indices);

/// Dropped generator terms of one constraint.
struct TruncationTally {
  std::size_t count = 0;
  double mass = 0.0;  // sum of |coefficient|
};

/// One moment equation  L^h_a(m^{0,1}) + m^1_a = m^0_a + e_a.
///
/// `occ_coeffs` carries the negated generator of the test function
/// t^{a0} x^a, so the residual L(occ) + terminal - rhs vanishes on exact
/// moments.
struct LiouvilleConstraint {
  MultiIndex test;
  std::vector<TemplateTerm> occ_coeffs;
  MultiIndex terminal;
  double terminal_coef = 1.0;
  double rhs = 0.0;
  TruncationTally truncated;
  std::size_t slack = 0;
};

/// Caps of the occupation moments referenced by the constraints: algebraic
/// degree r + 1, harmonic degree h.
MomentCaps constraint_occupation_caps(int order, int harmonic, std::size_t cutoff);

/// All nonzero indices over (t, x) with |a| <= r and harmonic degree <= h.
std::vector<MultiIndex> test_indices(int order, int harmonic, std::size_t cutoff);

/// `drift` lists one polynomial per real coordinate (see drift_polynomials);
/// `initial` supplies m^0_a for time-free test indices.
LiouvilleConstraint assemble_constraint(const MultiIndex& a, const std::vector<Polynomial>& drift,
                                        const MomentCaps& occ_caps, const MomentSequence& initial);

/// L(occ) + c * term - rhs.
double residual(const LiouvilleConstraint& c, const MomentSequence& occ, const MomentSequence& term);

struct LiouvilleSystem {
  int order = 0;
  int harmonic = 0;
  std::size_t cutoff = 0;
  double eps = 0.0;
  MomentCaps occ_caps;
  MomentCaps term_caps;
  std::vector<LiouvilleConstraint> constraints;

  std::size_t truncated_constraints() const;
};

/// Assembles every constraint of test_indices(order, harmonic, cutoff), in
/// order, with slack ids 0..n-1.
LiouvilleSystem assemble_system(int order, int harmonic, std::size_t cutoff, double eps,
                                const MomentSequence& initial);

/// Manifest with caps, counts and per-constraint sparse coefficients.
nlohmann::json system_manifest(const LiouvilleSystem& sys);

}  // namespace rdsos
