#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "rdsos/liouville.hpp"
#include "rdsos/moments.hpp"

namespace rdsos {

struct RelaxationOptions {
  int order = 4;           // r: test functions of algebraic degree <= r
  int harmonic = 4;        // h
  std::size_t cutoff = 4;  // K
  double eps = 0.1;
  /// Ball radius of the support set; derived from the initial spec if unset.
  std::optional<double> radius;
  /// Weight lambda in lambda * sum e_a^2. Does not change the minimizers.
  double objective_scale = 1e4;
  /// Optional ridge * sum m_a^2 on pseudo-moments.
  double ridge = 0.0;
};

/// Default R^2: Gaussian 1 + sum_j (mean_j^2 + 9 sigma_j^2); Dirac 2|x0|^2 + 1;
/// ensembles take the largest member value.
double default_radius_squared(const InitialMeasureSpec& spec, std::size_t cutoff);

/// Moment order s = ceil((r + 1) / 2).
int moment_order(int relaxation_order);

/// A x = rhs over the flat variable vector.
struct LinearRow {
  std::vector<std::pair<std::size_t, double>> coeffs;
  double rhs = 0.0;
  std::string label;
};

/// Entry (row, col), row <= col, of a PSD block: += coef * x[var].
struct PsdEntry {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  std::size_t var = 0;
  double coef = 0.0;
};

struct PsdBlock {
  std::string name;
  std::size_t dim = 0;
  std::vector<PsdEntry> entries;
};

/// Semidefinite relaxation of the Liouville moment system.
///
/// Variable layout: [occupation pseudo-moments | terminal pseudo-moments |
/// slacks e]. The first `num_liouville` equality rows are the Liouville
/// constraints L(occ) + m1 - e = m0; the remaining rows are hard equalities
/// (masses and the Lebesgue time marginal), each on a single variable.
/// Objective: objective_scale * |e|^2 + ridge * |moments|^2.
struct ConicProblem {
  RelaxationOptions options;
  int moment_order = 0;
  double radius_squared = 0.0;

  MomentCaps occ_caps;
  MomentCaps term_caps;
  std::vector<MultiIndex> occ_vars;
  std::vector<MultiIndex> term_vars;
  std::size_t num_slack = 0;

  std::vector<LinearRow> equalities;
  std::size_t num_liouville = 0;
  std::vector<PsdBlock> blocks;
  std::vector<TruncationTally> truncation;  // per Liouville row

  std::size_t occ_offset() const { return 0; }
  std::size_t term_offset() const { return occ_vars.size(); }
  std::size_t slack_offset() const { return occ_vars.size() + term_vars.size(); }
  std::size_t num_moments() const { return occ_vars.size() + term_vars.size(); }
  std::size_t num_vars() const { return num_moments() + num_slack; }

  /// Throws std::logic_error if any row or block references an undeclared
  /// variable or a block entry lies outside its dimension.
  void validate() const;

  nlohmann::json manifest() const;
};

ConicProblem build_relaxation(const RelaxationOptions& opts, const InitialMeasureSpec& spec);
/// Same, from precomputed initial moments (caps: degree >= r, harmonic h).
ConicProblem build_relaxation(const RelaxationOptions& opts, const MomentSequence& initial,
                              double radius_squared);

/// Moment-sequence initial guess: Lebesgue(t) x mu_0 frozen in time for the
/// occupation block and mu_0 for the terminal block. Slacks follow.
Eigen::VectorXd frozen_guess(const ConicProblem& p, const MomentSequence& initial);

enum class SolveStatus { kSolved, kIterationLimit, kInfeasible, kUnbounded, kNumericalError };
std::string to_string(SolveStatus s);

struct SolverOptions {
  std::string backend = "admm";
  int max_iterations = 50000;
  double tol_rel = 1e-7;
  double tol_abs = 1e-9;
  double rho = 1.0;
  double over_relaxation = 1.6;
  bool adaptive_rho = true;
  int check_every = 10;
  double psd_tol = 1e-6;
  int verbose = 0;
};

struct BackendResult {
  SolveStatus status = SolveStatus::kNumericalError;
  Eigen::VectorXd x;  // full variable vector, slacks included
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::string message;
};

class ConicBackend {
 public:
  virtual ~ConicBackend() = default;
  virtual std::string id() const = 0;
  virtual BackendResult solve(const ConicProblem& p, const SolverOptions& opts,
                              const Eigen::VectorXd* warm_start) const = 0;
};

/// "admm": operator splitting with PSD projections (built in).
std::unique_ptr<ConicBackend> make_backend(std::string_view id);
std::vector<std::string> available_backends();

struct BlockDims {
  std::string name;
  std::size_t dim = 0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::kNumericalError;
  double objective = 0.0;     // sum e_a^2 (unscaled)
  double max_residual = 0.0;  // max |e_a|
  double max_hard_violation = 0.0;
  double min_eigenvalue = 0.0;
  std::vector<BlockDims> blocks;
  std::vector<double> block_min_eigenvalues;
  std::size_t num_vars = 0;
  std::size_t num_occ = 0;
  std::size_t num_term = 0;
  std::size_t num_equalities = 0;
  std::size_t num_liouville = 0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double wall_seconds = 0.0;
  std::string backend;
  SolverOptions solver;
  std::string message;

  nlohmann::json to_json() const;
};

struct Solution {
  MomentSequence occupation;
  MomentSequence terminal;
  Eigen::VectorXd x;
  SolveReport report;
};

/// Runs the backend named in `opts` and packages the result. The default
/// warm start is the frozen guess when `initial` is given.
Solution solve(const ConicProblem& p, const SolverOptions& opts,
               const MomentSequence* initial = nullptr);

/// Dense symmetric matrix of one block at x.
Eigen::MatrixXd block_matrix(const PsdBlock& b, const Eigen::VectorXd& x);

/// Diagnostics of an arbitrary point (used by solve and by tests).
SolveReport evaluate_point(const ConicProblem& p, const Eigen::VectorXd& x);

/// Splits the flat vector into occupation / terminal sequences.
std::pair<MomentSequence, MomentSequence> split_moments(const ConicProblem& p, const Eigen::VectorXd& x);

/// Flat vector from sequences; slacks are set to the Liouville residuals.
Eigen::VectorXd pack_moments(const ConicProblem& p, const MomentSequence& occ, const MomentSequence& term);

// ---------------------------------------------------------------------------
// SDPA sparse exchange format.

/// Problem in SDPA dual form: minimize c'y s.t. sum_i y_i F_i - F_0 >= 0.
struct SdpaProblem {
  struct Entry {
    std::size_t mat = 0;  // 0 is F_0
    std::size_t block = 0;  // 1-based
    std::size_t i = 0;      // 1-based, i <= j
    std::size_t j = 0;
    double value = 0.0;
  };
  std::vector<std::string> comments;
  std::size_t num_vars = 0;
  std::vector<long> block_struct;  // negative for diagonal blocks
  std::vector<double> c;
  std::vector<Entry> entries;  // sorted by (mat, block, i, j), no duplicates

  /// Block matrices sum_i y_i F_i - F_0 at y.
  std::vector<Eigen::MatrixXd> evaluate(const Eigen::VectorXd& y) const;
};

/// The quadratic objective becomes min tau with
/// [[tau, sqrt(lambda) e'], [sqrt(lambda) e, I]] >= 0; equalities become
/// pairs of diagonal (LP) entries. Variables: [moments | slacks | tau].
SdpaProblem to_sdpa(const ConicProblem& p);
void write_sdpa(const SdpaProblem& p, std::ostream& os);
SdpaProblem read_sdpa(std::istream& is);
void export_sdpa(const ConicProblem& p, const std::string& path);

/// SDPA point for a flat problem vector (tau = lambda |e|^2 + ridge |m|^2).
Eigen::VectorXd sdpa_point(const ConicProblem& p, const Eigen::VectorXd& x);

// ---------------------------------------------------------------------------

struct MomentMismatch {
  MultiIndex index;
  double computed = 0.0;
  double reference = 0.0;
  double scaled_error = 0.0;  // |c - r| / max(|r|, floor)
};

struct MatchStats {
  std::size_t shared = 0;
  std::size_t matched = 0;
  double fraction = 0.0;
  double rel_tol = 0.0;
  double floor = 0.0;
  std::vector<MomentMismatch> worst;  // descending scaled error

  nlohmann::json to_json() const;
};

/// Fraction of shared indices with |c - r| <= rel_tol * max(|r|, floor).
MatchStats compare_moments(const MomentSequence& computed, const MomentSequence& reference,
                           double rel_tol, double floor = 1e-9, std::size_t keep_worst = 10);

}  // namespace rdsos
