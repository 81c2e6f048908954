#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rdsos/liouville.hpp"
#include "rdsos/moments.hpp"
#include "rdsos/relaxation.hpp"
#include "rdsos/spectral.hpp"

namespace rdsos {

/// Snapshots of a finite-difference run on a uniform time grid.
struct GridTrajectory {
  std::vector<double> times;  // 0 = t_0 < ... < t_M = T
  std::vector<GridFunction> states;
  double dx = 0.0;
  double dt = 0.0;
  std::string method;

  /// Throws std::logic_error unless snapshots share N and times increase
  /// from 0.
  void validate() const;
};

/// Step count M = ceil(T / dt_max), rounded up to even if `even`.
std::size_t step_count(double horizon, double dt_max, bool even = false);

/// Crank-Nicolson for the periodic second difference, Heun for the
/// reaction. The step dt is shrunk so that M steps land exactly on the
/// horizon. Throws std::invalid_argument if dt * eps * max(1, |1 - 2y0|)
/// exceeds 1, std::runtime_error on non-finite values.
GridTrajectory fd_solve(const GridFunction& y0, double eps, double dt, double horizon = 1.0,
                        bool even_steps = false);

/// Discrete L2 norm sqrt(dx * sum y_i^2).
double l2_norm(std::span<const double> y);

void write_trajectory_csv(const GridTrajectory& traj, std::ostream& os);

enum class TimeQuadrature { kTrapezoid, kSimpson };
std::string to_string(TimeQuadrature q);
TimeQuadrature time_quadrature_from_string(const std::string& s);

/// How Gaussian specs are turned into an ensemble.
enum class GaussianSampling { kMonteCarlo, kGaussHermite };
std::string to_string(GaussianSampling s);
GaussianSampling gaussian_sampling_from_string(const std::string& s);

struct OracleOptions {
  std::size_t grid = 128;
  double dt = 1e-3;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  TimeQuadrature quadrature = TimeQuadrature::kTrapezoid;
  GaussianSampling sampling = GaussianSampling::kMonteCarlo;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct EmpiricalMoments {
  MomentSequence occ;
  MomentSequence term;
  /// Standard errors of the sample mean; empty unless sampling was random.
  MomentSequence occ_stderr;
  MomentSequence term_stderr;
  std::size_t samples = 0;
  std::string quadrature;
  std::string sampling;
  std::uint64_t seed = 0;
};

/// Weighted initial states realizing a spec on the grid.
struct WeightedStates {
  std::vector<GridFunction> states;
  std::vector<double> weights;
  bool random = false;
};

/// Dirac: one state. Ensemble: its members. Gaussian: draws (seeded per
/// sample id, so independent of thread count) or a Gauss-Hermite tensor
/// grid with the fewest nodes per coordinate reaching `opts.samples`.
WeightedStates initial_states(const InitialMeasureSpec& spec, std::size_t cutoff, const OracleOptions& opts);

/// Probabilists' Gauss-Hermite rule: nodes and weights (weights sum to 1).
std::pair<std::vector<double>, std::vector<double>> gauss_hermite(std::size_t n);
/// Gauss-Legendre rule on [0, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre01(std::size_t n);

/// Propagates every state with fd_solve and averages monomials of the real
/// coordinates. Failures on a sample rethrow with its id.
EmpiricalMoments pushforward_moments(const InitialMeasureSpec& spec, const MomentCaps& occ_caps,
                                     const MomentCaps& term_caps, double eps, const OracleOptions& opts);

/// Exact logistic trajectory from the constant state y0, with Gauss-Legendre
/// time quadrature; moments involving non-constant modes vanish.
double logistic(double y0, double eps, double t);
std::pair<MomentSequence, MomentSequence> logistic_moments(double y0, double eps, const MomentCaps& occ_caps,
                                                           const MomentCaps& term_caps);

/// Push-forward moments of a product Gaussian under the exact heat flow
/// (eps = 0): each coordinate of mode k decays like exp(-4 pi^2 k^2 t).
std::pair<MomentSequence, MomentSequence> heat_gaussian_moments(const GaussianProduct& g,
                                                                const MomentCaps& occ_caps,
                                                                const MomentCaps& term_caps);

/// Random grid state with values in [0, 1]. modes > 0: a random
/// trigonometric polynomial of that many modes mapped affinely onto a random
/// subinterval; modes = 0: independent uniform values per grid point.
GridFunction random_in_set_state(std::size_t n, std::size_t modes, std::uint64_t seed);

/// max_t |y1(t) - y2(t)| / (exp(eps t) |y1(0) - y2(0)|) in the discrete L2
/// norm. Both states must lie in [0, 1].
double contraction_check(const GridFunction& y1, const GridFunction& y2, double eps, double dt);

/// Extremes over all snapshots; the initial snapshot must lie in [0, 1].
std::pair<double, double> invariance_check(const GridTrajectory& traj);

struct DissipativityResult {
  std::vector<double> norms;  // per snapshot
  double max_increase = 0.0;  // max_n (|y_{n+1}| - |y_n|), may be negative
  bool monotone = false;      // max_increase <= tol
};
/// Heat flow (eps = 0) from y0.
DissipativityResult dissipativity_check(const GridFunction& y0, double dt, double tol = 1e-10);

struct NogapResult {
  MatchStats occupation;
  MatchStats terminal;
};
/// Relaxation pseudo-moments against the single trajectory from y0.
NogapResult nogap_check(const GridFunction& y0, double eps, const Solution& sol, const OracleOptions& opts,
                        double rel_tol);

}  // namespace rdsos
