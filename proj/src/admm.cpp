#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "rdsos/relaxation.hpp"

namespace rdsos {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Vec = Eigen::VectorXd;

// Consensus splitting  min f(m) s.t. G m = S, S in the PSD cone, with the
// moment variables fixed by hard rows substituted out. Matrix entries are
// stacked upper-triangle first; w carries the Frobenius weights (2 off the
// diagonal) so that all inner products are the matrix ones.
class AdmmBackend final : public ConicBackend {
 public:
  std::string id() const override { return "admm"; }
  BackendResult solve(const ConicProblem& p, const SolverOptions& opts,
                      const Eigen::VectorXd* warm_start) const override;
};

struct BlockLayout {
  std::size_t offset = 0;
  std::size_t dim = 0;
};

std::size_t packed(std::size_t i, std::size_t j) { return j * (j + 1) / 2 + i; }

void project_psd(const BlockLayout& b, const Vec& in, Vec& out, Eigen::MatrixXd& work,
                 Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es) {
  const auto n = static_cast<Eigen::Index>(b.dim);
  work.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      work(i, j) = work(j, i) = in[static_cast<Eigen::Index>(b.offset + packed(i, j))];
    }
  }
  es.compute(work);
  Vec ev = es.eigenvalues();
  if (ev.minCoeff() >= 0.0) {
    out.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.dim * (b.dim + 1) / 2)) =
        in.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.dim * (b.dim + 1) / 2));
    return;
  }
  const auto& v = es.eigenvectors();
  Eigen::Index first = 0;
  while (first < n && ev[first] <= 0.0) ++first;
  const Eigen::Index k = n - first;
  if (k == 0) {
    work.setZero();
  } else {
    const Eigen::MatrixXd vp = v.rightCols(k);
    work.noalias() = vp * ev.tail(k).asDiagonal() * vp.transpose();
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      out[static_cast<Eigen::Index>(b.offset + packed(i, j))] = work(i, j);
    }
  }
}

BackendResult AdmmBackend::solve(const ConicProblem& p, const SolverOptions& opts,
                                 const Eigen::VectorXd* warm_start) const {
  BackendResult res;
  const std::size_t n = p.num_moments();
  if (opts.rho <= 0.0 || opts.over_relaxation <= 0.0 || opts.over_relaxation >= 2.0 ||
      opts.max_iterations < 1 || opts.check_every < 1) {
    throw std::invalid_argument("admm: invalid solver options");
  }

  // Hard rows fix single variables.
  std::vector<double> fixed_value(n, std::nan(""));
  std::vector<bool> is_fixed(n, false);
  for (std::size_t r = p.num_liouville; r < p.equalities.size(); ++r) {
    const auto& row = p.equalities[r];
    if (row.coeffs.size() != 1 || row.coeffs[0].first >= n || row.coeffs[0].second == 0.0) {
      throw std::invalid_argument("admm: hard row '" + row.label + "' must fix a single moment");
    }
    const auto v = row.coeffs[0].first;
    const double val = row.rhs / row.coeffs[0].second;
    if (is_fixed[v] && std::abs(fixed_value[v] - val) > 1e-14 * (1.0 + std::abs(val))) {
      res.status = SolveStatus::kInfeasible;
      res.x = Vec::Zero(static_cast<Eigen::Index>(p.num_vars()));
      res.message = "conflicting hard rows on one variable";
      return res;
    }
    is_fixed[v] = true;
    fixed_value[v] = val;
  }
  std::vector<long> free_pos(n, -1);
  std::vector<std::size_t> free_vars;
  for (std::size_t v = 0; v < n; ++v) {
    if (!is_fixed[v]) {
      free_pos[v] = static_cast<long>(free_vars.size());
      free_vars.push_back(v);
    }
  }
  const auto nf = static_cast<Eigen::Index>(free_vars.size());

  // Liouville rows over moments: A_f m_f = b_f.
  const auto nl = static_cast<Eigen::Index>(p.num_liouville);
  std::vector<Triplet> at;
  Vec b = Vec::Zero(nl);
  for (Eigen::Index r = 0; r < nl; ++r) {
    const auto& row = p.equalities[static_cast<std::size_t>(r)];
    b[r] = row.rhs;
    for (const auto& [v, c] : row.coeffs) {
      if (v >= n) continue;  // slack
      if (is_fixed[v]) b[r] -= c * fixed_value[v];
      else at.emplace_back(r, free_pos[v], c);
    }
  }
  SpMat a(nl, nf);
  a.setFromTriplets(at.begin(), at.end());

  // Stacked PSD map and constant part.
  std::vector<BlockLayout> layout;
  std::size_t npos = 0;
  for (const auto& blk : p.blocks) {
    layout.push_back({npos, blk.dim});
    npos += blk.dim * (blk.dim + 1) / 2;
  }
  const auto np = static_cast<Eigen::Index>(npos);
  std::vector<Triplet> gt;
  Vec gconst = Vec::Zero(np);
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    for (const auto& e : p.blocks[k].entries) {
      const auto pos = static_cast<Eigen::Index>(layout[k].offset + packed(e.row, e.col));
      if (is_fixed[e.var]) gconst[pos] += e.coef * fixed_value[e.var];
      else gt.emplace_back(pos, free_pos[e.var], e.coef);
    }
  }
  SpMat g(np, nf);
  g.setFromTriplets(gt.begin(), gt.end());
  Vec w = Vec::Ones(np);
  for (const auto& bl : layout) {
    for (std::size_t j = 0; j < bl.dim; ++j) {
      for (std::size_t i = 0; i < j; ++i) w[static_cast<Eigen::Index>(bl.offset + packed(i, j))] = 2.0;
    }
  }

  const double lambda = p.options.objective_scale;
  SpMat eye(nf, nf);
  eye.setIdentity();
  const SpMat p1 = SpMat(2.0 * lambda * SpMat(a.transpose() * a)) + 2.0 * p.options.ridge * eye;
  const SpMat gtw = SpMat(g.transpose()) * w.asDiagonal();
  const SpMat p2 = gtw * g;
  const Vec q0 = 2.0 * lambda * (a.transpose() * b);

  double rho = opts.rho;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  SpMat q = p1 + rho * p2;
  ldlt.analyzePattern(q);
  auto factor = [&]() {
    q = p1 + rho * p2;
    ldlt.factorize(q);
    return ldlt.info() == Eigen::Success;
  };
  auto finish = [&](const Vec& mf, SolveStatus st) {
    Vec x = Vec::Zero(static_cast<Eigen::Index>(p.num_vars()));
    for (std::size_t v = 0; v < n; ++v) {
      x[static_cast<Eigen::Index>(v)] = is_fixed[v] ? fixed_value[v] : mf[free_pos[v]];
    }
    for (std::size_t r = 0; r < p.num_liouville; ++r) {
      double e = -p.equalities[r].rhs;
      for (const auto& [v, c] : p.equalities[r].coeffs) {
        if (v < n) e += c * x[static_cast<Eigen::Index>(v)];
      }
      x[static_cast<Eigen::Index>(p.slack_offset() + r)] = e;
    }
    res.x = std::move(x);
    res.status = st;
  };

  Vec mf = Vec::Zero(nf);
  if (warm_start != nullptr) {
    if (warm_start->size() != static_cast<Eigen::Index>(p.num_vars())) {
      throw std::invalid_argument("admm: warm start has the wrong length");
    }
    for (Eigen::Index i = 0; i < nf; ++i) mf[i] = (*warm_start)[static_cast<Eigen::Index>(free_vars[i])];
  }
  if (!factor()) {
    finish(mf, SolveStatus::kNumericalError);
    res.message = "factorization failed";
    return res;
  }

  Eigen::MatrixXd work;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  auto project = [&](const Vec& in, Vec& out) {
    out.resize(np);
    for (const auto& bl : layout) project_psd(bl, in, out, work, es);
  };
  auto wnorm = [&](const Vec& v) { return std::sqrt(v.dot(w.asDiagonal() * v)); };

  Vec gm = g * mf + gconst;
  Vec s;
  project(gm, s);
  Vec u = Vec::Zero(np);
  Vec s_old = s;
  Vec zrel(np);
  const double alpha = opts.over_relaxation;
  double u_scale0 = 0.0;

  for (int it = 1; it <= opts.max_iterations; ++it) {
    const bool check = it % opts.check_every == 0 || it == 1;
    if (check) s_old = s;
    const Vec rhs = q0 + rho * (gtw * (s - u - gconst));
    mf = ldlt.solve(rhs);
    gm.noalias() = g * mf;
    gm += gconst;
    zrel = alpha * gm + (1.0 - alpha) * s;
    project(zrel + u, s);
    u += zrel - s;

    if (!check) continue;
    if (!mf.allFinite() || !u.allFinite()) {
      finish(mf, SolveStatus::kNumericalError);
      res.iterations = it;
      res.message = "non-finite iterate";
      return res;
    }
    const double r_pri = wnorm(gm - s);
    const double r_dual = rho * (gtw * (s - s_old)).norm();
    const double eps_pri = opts.tol_abs * std::sqrt(static_cast<double>(np)) +
                           opts.tol_rel * std::max(wnorm(gm), wnorm(s));
    const double eps_dual = opts.tol_abs * std::sqrt(static_cast<double>(nf)) +
                            opts.tol_rel * rho * (gtw * u).norm();
    res.primal_residual = r_pri;
    res.dual_residual = r_dual;
    res.iterations = it;
    if (opts.verbose > 0 && (it == 1 || it % (opts.check_every * 50) == 0)) {
      std::fprintf(stderr, "admm %6d  pri %.3e  dual %.3e  rho %.3e\n", it, r_pri, r_dual, rho);
    }
    if (r_pri <= eps_pri && r_dual <= eps_dual) {
      finish(mf, SolveStatus::kSolved);
      res.message = "converged";
      return res;
    }
    const double un = rho * wnorm(u);
    if (u_scale0 == 0.0 && un > 0.0) u_scale0 = un;
    if (u_scale0 > 0.0 && un > 1e12 * std::max(1.0, u_scale0)) {
      finish(mf, SolveStatus::kInfeasible);
      res.message = "dual iterate diverged";
      return res;
    }
    if (opts.adaptive_rho && it > 1) {
      double next = rho;
      if (r_pri > 10.0 * r_dual) next = rho * 2.0;
      else if (r_dual > 10.0 * r_pri) next = rho / 2.0;
      next = std::clamp(next, 1e-6, 1e8);
      if (next != rho) {
        u *= rho / next;
        rho = next;
        if (!factor()) {
          finish(mf, SolveStatus::kNumericalError);
          res.message = "factorization failed";
          return res;
        }
      }
    }
  }
  finish(mf, SolveStatus::kIterationLimit);
  res.iterations = opts.max_iterations;
  res.message = "iteration limit reached";
  return res;
}

}  // namespace

std::unique_ptr<ConicBackend> make_backend(std::string_view id) {
  if (id == "admm") return std::make_unique<AdmmBackend>();
  throw std::invalid_argument("unknown solver backend '" + std::string(id) + "'");
}

std::vector<std::string> available_backends() { return {"admm"}; }

}  // namespace rdsos
