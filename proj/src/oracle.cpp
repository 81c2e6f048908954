#include "rdsos/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "rdsos/moment_io.hpp"

namespace rdsos {

void GridTrajectory::validate() const {
  if (states.empty() || states.size() != times.size()) throw std::logic_error("GridTrajectory: snapshot count mismatch");
  if (times.front() != 0.0) throw std::logic_error("GridTrajectory: first time must be 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::logic_error("GridTrajectory: times must increase");
    if (states[i].size() != states[0].size()) throw std::logic_error("GridTrajectory: grid size changes");
  }
}

std::size_t step_count(double horizon, double dt_max, bool even) {
  if (!(dt_max > 0.0) || !(horizon > 0.0)) throw std::invalid_argument("step_count: dt and horizon must be > 0");
  auto m = static_cast<std::size_t>(std::ceil(horizon / dt_max - 1e-9));
  m = std::max<std::size_t>(m, 1);
  if (even && m % 2 == 1) ++m;
  return m;
}

namespace {

// Constant-coefficient cyclic tridiagonal system: diag d, both off-diagonals
// and both corners equal to o. Sherman-Morrison around a Thomas solve.
class CyclicTridiagonal {
 public:
  CyclicTridiagonal(std::size_t n, double d, double o) : n_(n), o_(o), gamma_(-d) {
    cp_.resize(n);
    den_.resize(n);
    std::vector<double> diag(n, d);
    diag[0] = d - gamma_;
    diag[n - 1] = d - o * o / gamma_;
    den_[0] = diag[0];
    cp_[0] = o / den_[0];
    for (std::size_t i = 1; i < n; ++i) {
      den_[i] = diag[i] - o * cp_[i - 1];
      cp_[i] = o / den_[i];
    }
    z_.assign(n, 0.0);
    z_[0] = gamma_;
    z_[n - 1] = o;
    thomas(z_);
    zfac_ = 1.0 + z_[0] + o * z_[n - 1] / gamma_;
  }

  void solve(std::vector<double>& x) const {
    thomas(x);
    const double f = (x[0] + o_ * x[n_ - 1] / gamma_) / zfac_;
    for (std::size_t i = 0; i < n_; ++i) x[i] -= f * z_[i];
  }

 private:
  void thomas(std::vector<double>& x) const {
    x[0] /= den_[0];
    for (std::size_t i = 1; i < n_; ++i) x[i] = (x[i] - o_ * x[i - 1]) / den_[i];
    for (std::size_t i = n_ - 1; i-- > 0;) x[i] -= cp_[i] * x[i + 1];
  }

  std::size_t n_;
  double o_;
  double gamma_;
  double zfac_ = 1.0;
  std::vector<double> cp_, den_, z_;
};

}  // namespace

GridTrajectory fd_solve(const GridFunction& y0, double eps, double dt, double horizon, bool even_steps) {
  const std::size_t n = y0.size();
  if (n < 3) throw std::invalid_argument("fd_solve: need at least 3 grid points");
  if (!(eps >= 0.0)) throw std::invalid_argument("fd_solve: eps must be >= 0");
  const std::size_t m = step_count(horizon, dt, even_steps);
  const double h = horizon / static_cast<double>(m);
  double amp = 1.0;
  for (double v : y0.values()) amp = std::max(amp, std::abs(1.0 - 2.0 * v));
  if (h * eps * amp > 1.0) {
    throw std::invalid_argument("fd_solve: reaction step dt*eps*max|1-2y| = " + format_double(h * eps * amp) +
                                " exceeds 1");
  }
  const double dx = 1.0 / static_cast<double>(n);
  const double lam = h / (dx * dx);
  const CyclicTridiagonal implicit(n, 1.0 + lam, -0.5 * lam);

  GridTrajectory traj;
  traj.dx = dx;
  traj.dt = h;
  traj.method = "imex-cn-heun";
  traj.times.reserve(m + 1);
  traj.states.reserve(m + 1);
  traj.times.push_back(0.0);
  traj.states.push_back(y0);

  std::vector<double> y(y0.values().begin(), y0.values().end());
  std::vector<double> explicit_part(n), r0(n), pred(n), next(n);
  auto react = [eps](double v) { return eps * v * (1.0 - v); };
  for (std::size_t step = 1; step <= m; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      const double left = y[i == 0 ? n - 1 : i - 1];
      const double right = y[i + 1 == n ? 0 : i + 1];
      explicit_part[i] = y[i] + 0.5 * lam * (left - 2.0 * y[i] + right);
      r0[i] = react(y[i]);
      pred[i] = explicit_part[i] + h * r0[i];
    }
    implicit.solve(pred);
    for (std::size_t i = 0; i < n; ++i) next[i] = explicit_part[i] + 0.5 * h * (r0[i] + react(pred[i]));
    implicit.solve(next);
    for (double v : next) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("fd_solve: non-finite state at step " + std::to_string(step));
      }
    }
    y.swap(next);
    traj.times.push_back(step == m ? horizon : h * static_cast<double>(step));
    traj.states.emplace_back(y);
  }
  return traj;
}

double l2_norm(std::span<const double> y) {
  double s = 0.0;
  for (double v : y) s += v * v;
  return std::sqrt(s / static_cast<double>(y.size()));
}

void write_trajectory_csv(const GridTrajectory& traj, std::ostream& os) {
  const std::size_t n = traj.states.empty() ? 0 : traj.states[0].size();
  os << "# N=" << n << " M=" << (traj.times.empty() ? 0 : traj.times.size() - 1)
     << " dt=" << format_double(traj.dt) << " dx=" << format_double(traj.dx) << " scheme=" << traj.method << '\n';
  os << 't';
  for (std::size_t i = 0; i < n; ++i) os << ",y" << i;
  os << '\n';
  for (std::size_t q = 0; q < traj.times.size(); ++q) {
    os << format_double(traj.times[q]);
    for (double v : traj.states[q].values()) os << ',' << format_double(v);
    os << '\n';
  }
}

std::string to_string(TimeQuadrature q) { return q == TimeQuadrature::kSimpson ? "simpson" : "trapezoid"; }

TimeQuadrature time_quadrature_from_string(const std::string& s) {
  if (s == "trapezoid") return TimeQuadrature::kTrapezoid;
  if (s == "simpson") return TimeQuadrature::kSimpson;
  throw std::invalid_argument("unknown time quadrature '" + s + "'");
}

std::string to_string(GaussianSampling s) {
  return s == GaussianSampling::kGaussHermite ? "gauss_hermite" : "monte_carlo";
}

GaussianSampling gaussian_sampling_from_string(const std::string& s) {
  if (s == "monte_carlo") return GaussianSampling::kMonteCarlo;
  if (s == "gauss_hermite") return GaussianSampling::kGaussHermite;
  throw std::invalid_argument("unknown Gaussian sampling '" + s + "'");
}

namespace {

// Golub-Welsch for a symmetric Jacobi matrix with zero diagonal.
std::pair<std::vector<double>, std::vector<double>> golub_welsch(const std::vector<double>& offdiag, double mass) {
  const auto n = static_cast<Eigen::Index>(offdiag.size() + 1);
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) j(i, i + 1) = j(i + 1, i) = offdiag[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
    const double v = es.eigenvectors()(0, i);
    w[static_cast<std::size_t>(i)] = mass * v * v;
  }
  return {x, w};
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> gauss_hermite(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_hermite: need at least one node");
  std::vector<double> off(n - 1);
  for (std::size_t k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  return golub_welsch(off, 1.0);
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre01(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre01: need at least one node");
  std::vector<double> off(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    off[k - 1] = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  auto [x, w] = golub_welsch(off, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = 0.5 * (x[i] + 1.0);
    w[i] *= 0.5;
  }
  return {x, w};
}

WeightedStates initial_states(const InitialMeasureSpec& spec, std::size_t cutoff, const OracleOptions& opts) {
  validate_spec(spec, cutoff);
  WeightedStates ws;
  if (const auto* d = std::get_if<DiracAtFunction>(&spec)) {
    ws.states.push_back(d->state);
    ws.weights.push_back(1.0);
    return ws;
  }
  if (const auto* e = std::get_if<Ensemble>(&spec)) {
    ws.states = e->members;
    ws.weights = e->weights;
    return ws;
  }
  const auto& g = std::get<GaussianProduct>(spec);
  if (opts.grid < 2 * cutoff + 1) throw std::invalid_argument("initial_states: grid too coarse for the cutoff");
  if (opts.samples < 1) throw std::invalid_argument("initial_states: need at least one sample");
  const std::size_t dim = g.mean.size();
  if (opts.sampling == GaussianSampling::kMonteCarlo) {
    ws.random = true;
    ws.states.reserve(opts.samples);
    for (std::size_t s = 0; s < opts.samples; ++s) {
      std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                        static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(static_cast<std::uint64_t>(s) >> 32)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal;
      std::vector<double> x(dim);
      for (std::size_t j = 0; j < dim; ++j) x[j] = g.mean[j] + g.sigma[j] * normal(rng);
      ws.states.push_back(idft(from_real(x), opts.grid));
    }
    ws.weights.assign(opts.samples, 1.0 / static_cast<double>(opts.samples));
    return ws;
  }
  std::vector<std::size_t> spread;
  for (std::size_t j = 0; j < dim; ++j) {
    if (g.sigma[j] > 0.0) spread.push_back(j);
  }
  std::size_t nodes = 1;
  auto total = [&](std::size_t q) {
    double t = 1.0;
    for (std::size_t i = 0; i < spread.size(); ++i) t *= static_cast<double>(q);
    return t;
  };
  if (!spread.empty()) {
    while (total(nodes) < static_cast<double>(opts.samples)) ++nodes;
  }
  const auto [gx, gw] = gauss_hermite(nodes);
  std::vector<std::size_t> digit(spread.size(), 0);
  while (true) {
    std::vector<double> x = g.mean;
    double w = 1.0;
    for (std::size_t i = 0; i < spread.size(); ++i) {
      x[spread[i]] += g.sigma[spread[i]] * gx[digit[i]];
      w *= gw[digit[i]];
    }
    ws.states.push_back(idft(from_real(x), opts.grid));
    ws.weights.push_back(w);
    std::size_t i = 0;
    while (i < digit.size() && ++digit[i] == nodes) digit[i++] = 0;
    if (i == digit.size()) break;
  }
  return ws;
}

namespace {

// Neumaier-compensated running sums.
struct CompensatedSum {
  std::vector<double> sum, comp;
  explicit CompensatedSum(std::size_t n) : sum(n, 0.0), comp(n, 0.0) {}
  void add(std::size_t i, double v) {
    const double t = sum[i] + v;
    if (std::abs(sum[i]) >= std::abs(v)) comp[i] += (sum[i] - t) + v;
    else comp[i] += (v - t) + sum[i];
    sum[i] = t;
  }
  double value(std::size_t i) const { return sum[i] + comp[i]; }
};

// Evaluates every spatial monomial of a list via parent * coordinate.
struct MonomialTable {
  std::vector<MultiIndex> monomials;
  std::vector<long> parent;
  std::vector<int> coord;
  std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> index;

  MonomialTable(std::size_t cutoff, int degree, int harmonic) {
    monomials = enumerate_monomials({false, cutoff}, degree, harmonic);
    for (std::size_t i = 0; i < monomials.size(); ++i) index.emplace(monomials[i], i);
    parent.resize(monomials.size(), -1);
    coord.resize(monomials.size(), -1);
    for (std::size_t i = 1; i < monomials.size(); ++i) {
      const int c = monomials[i].spatial().back().first;
      parent[i] = static_cast<long>(index.at(*monomials[i].lowered(c)));
      coord[i] = c;
    }
  }

  void evaluate(std::span<const double> x, std::vector<double>& out) const {
    out.resize(monomials.size());
    out[0] = 1.0;
    for (std::size_t i = 1; i < monomials.size(); ++i) out[i] = out[static_cast<std::size_t>(parent[i])] * x[coord[i]];
  }
};

std::vector<double> time_weights(const GridTrajectory& traj, TimeQuadrature q) {
  const std::size_t m = traj.times.size() - 1;
  const double h = traj.dt;
  std::vector<double> w(m + 1, h);
  if (q == TimeQuadrature::kTrapezoid) {
    w.front() = w.back() = 0.5 * h;
    return w;
  }
  if (m % 2 != 0) throw std::logic_error("Simpson quadrature needs an even step count");
  for (std::size_t i = 0; i <= m; ++i) w[i] = h / 3.0 * (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0));
  return w;
}

}  // namespace

EmpiricalMoments pushforward_moments(const InitialMeasureSpec& spec, const MomentCaps& occ_caps,
                                     const MomentCaps& term_caps, double eps, const OracleOptions& opts) {
  if (!occ_caps.time || term_caps.time || occ_caps.cutoff != term_caps.cutoff) {
    throw std::invalid_argument("pushforward_moments: need time-dependent occupation and time-free terminal caps");
  }
  const std::size_t cutoff = occ_caps.cutoff;
  const WeightedStates ws = initial_states(spec, cutoff, opts);
  const bool simpson = opts.quadrature == TimeQuadrature::kSimpson;

  const auto occ_idx = enumerate_monomials(occ_caps.variables(), occ_caps.max_degree, occ_caps.max_harmonic);
  const auto term_idx = enumerate_monomials(term_caps.variables(), term_caps.max_degree, term_caps.max_harmonic);
  const MonomialTable table(cutoff, std::max(occ_caps.max_degree, term_caps.max_degree),
                            std::max(occ_caps.max_harmonic, term_caps.max_harmonic));
  std::vector<std::size_t> occ_spatial, term_spatial;
  std::vector<int> occ_time;
  for (const auto& a : occ_idx) {
    occ_spatial.push_back(table.index.at(a.without_time()));
    occ_time.push_back(a.time());
  }
  for (const auto& a : term_idx) term_spatial.push_back(table.index.at(a));
  const int max_time = occ_caps.max_degree;
  const std::size_t nvals = occ_idx.size() + term_idx.size();

  auto sample_values = [&](std::size_t s, std::vector<double>& out) {
    const auto traj = fd_solve(ws.states[s], eps, opts.dt, 1.0, simpson);
    const DftPlan plan(traj.states[0].size(), cutoff);
    const auto w = time_weights(traj, opts.quadrature);
    std::vector<double> x(real_dimension(cutoff)), mono, tpow(static_cast<std::size_t>(max_time) + 1);
    out.assign(nvals, 0.0);
    for (std::size_t q = 0; q < traj.times.size(); ++q) {
      plan.forward_real(traj.states[q].values(), x);
      table.evaluate(x, mono);
      tpow[0] = w[q];
      for (std::size_t j = 1; j < tpow.size(); ++j) tpow[j] = tpow[j - 1] * traj.times[q];
      for (std::size_t k = 0; k < occ_idx.size(); ++k) {
        out[k] += tpow[static_cast<std::size_t>(occ_time[k])] * mono[occ_spatial[k]];
      }
    }
    for (std::size_t k = 0; k < term_idx.size(); ++k) out[occ_idx.size() + k] = mono[term_spatial[k]];
  };

  unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opts.threads;
  const std::size_t nsamp = ws.states.size();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, nsamp));
  const std::size_t chunk = 16 * static_cast<std::size_t>(threads);
  std::vector<std::vector<double>> buf(chunk);
  CompensatedSum mean(nvals), second(nvals);

  for (std::size_t base = 0; base < nsamp; base += chunk) {
    const std::size_t count = std::min(chunk, nsamp - base);
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::size_t> failed(threads, 0);
    auto work = [&](unsigned t) {
      for (std::size_t i = t; i < count; i += threads) {
        try {
          sample_values(base + i, buf[i]);
        } catch (...) {
          errors[t] = std::current_exception();
          failed[t] = base + i;
          return;
        }
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
      for (auto& th : pool) th.join();
    }
    for (unsigned t = 0; t < threads; ++t) {
      if (!errors[t]) continue;
      try {
        std::rethrow_exception(errors[t]);
      } catch (const std::exception& e) {
        throw std::runtime_error("pushforward_moments: sample " + std::to_string(failed[t]) + ": " + e.what());
      }
    }
    for (std::size_t i = 0; i < count; ++i) {
      const double w = ws.weights[base + i];
      for (std::size_t k = 0; k < nvals; ++k) {
        const double v = buf[i][k];
        mean.add(k, w * v);
        if (ws.random) second.add(k, w * v * v);
      }
    }
  }

  EmpiricalMoments em;
  em.occ = MomentSequence(occ_caps);
  em.term = MomentSequence(term_caps);
  em.samples = nsamp;
  em.quadrature = to_string(opts.quadrature);
  em.sampling = std::holds_alternative<GaussianProduct>(spec) ? to_string(opts.sampling)
                : std::holds_alternative<Ensemble>(spec)      ? "ensemble"
                                                              : "dirac";
  em.seed = opts.seed;
  for (std::size_t k = 0; k < occ_idx.size(); ++k) em.occ.set(occ_idx[k], mean.value(k));
  for (std::size_t k = 0; k < term_idx.size(); ++k) em.term.set(term_idx[k], mean.value(occ_idx.size() + k));
  if (ws.random) {
    em.occ_stderr = MomentSequence(occ_caps);
    em.term_stderr = MomentSequence(term_caps);
    const double n = static_cast<double>(nsamp);
    auto se = [&](std::size_t k) {
      const double m = mean.value(k);
      const double var = n > 1 ? std::max(0.0, second.value(k) - m * m) * n / (n - 1.0) : 0.0;
      return std::sqrt(var / n);
    };
    for (std::size_t k = 0; k < occ_idx.size(); ++k) em.occ_stderr.set(occ_idx[k], se(k));
    for (std::size_t k = 0; k < term_idx.size(); ++k) em.term_stderr.set(term_idx[k], se(occ_idx.size() + k));
  }
  return em;
}

double logistic(double y0, double eps, double t) {
  const double g = std::exp(eps * t);
  return y0 * g / (1.0 + y0 * (g - 1.0));
}

namespace {

// Composite Gauss-Legendre rule on [0, 1].
std::pair<std::vector<double>, std::vector<double>> composite_legendre(std::size_t panels, std::size_t nodes) {
  const auto [x, w] = gauss_legendre01(nodes);
  std::vector<double> cx, cw;
  const double h = 1.0 / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    for (std::size_t i = 0; i < nodes; ++i) {
      cx.push_back(h * (static_cast<double>(p) + x[i]));
      cw.push_back(h * w[i]);
    }
  }
  return {cx, cw};
}

}  // namespace

std::pair<MomentSequence, MomentSequence> logistic_moments(double y0, double eps, const MomentCaps& occ_caps,
                                                           const MomentCaps& term_caps) {
  if (!occ_caps.time || term_caps.time) throw std::invalid_argument("logistic_moments: caps mismatch");
  const auto [tx, tw] = composite_legendre(4, 20);
  auto only_u0 = [](const MultiIndex& a) {
    return a.spatial().empty() || (a.spatial().size() == 1 && a.spatial()[0].first == 0);
  };
  auto occ = MomentSequence::filled(occ_caps, [&](const MultiIndex& a) {
    if (!only_u0(a)) return 0.0;
    const int p = a.exponent(0);
    double s = 0.0;
    for (std::size_t i = 0; i < tx.size(); ++i) s += tw[i] * std::pow(tx[i], a.time()) * std::pow(logistic(y0, eps, tx[i]), p);
    return s;
  });
  const double y1 = logistic(y0, eps, 1.0);
  auto term = MomentSequence::filled(term_caps, [&](const MultiIndex& a) {
    return only_u0(a) ? std::pow(y1, a.exponent(0)) : 0.0;
  });
  return {std::move(occ), std::move(term)};
}

std::pair<MomentSequence, MomentSequence> heat_gaussian_moments(const GaussianProduct& g, const MomentCaps& occ_caps,
                                                                const MomentCaps& term_caps) {
  validate_spec(g, occ_caps.cutoff);
  if (!occ_caps.time || term_caps.time || occ_caps.cutoff != term_caps.cutoff) {
    throw std::invalid_argument("heat_gaussian_moments: caps mismatch");
  }
  const auto [tx, tw] = composite_legendre(40, 20);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  // Initial moment and total decay rate of the spatial part.
  auto factor = [&](const MultiIndex& a) {
    double m = 1.0, rate = 0.0;
    for (const auto& [id, e] : a.spatial()) {
      m *= gaussian_moment(g.mean[static_cast<std::size_t>(id)], g.sigma[static_cast<std::size_t>(id)], e);
      const double k = coord_mode(id);
      rate += two_pi * two_pi * k * k * e;
    }
    return std::pair{m, rate};
  };
  auto occ = MomentSequence::filled(occ_caps, [&](const MultiIndex& a) {
    const auto [m, rate] = factor(a);
    double s = 0.0;
    for (std::size_t i = 0; i < tx.size(); ++i) s += tw[i] * std::pow(tx[i], a.time()) * std::exp(-rate * tx[i]);
    return m * s;
  });
  auto term = MomentSequence::filled(term_caps, [&](const MultiIndex& a) {
    const auto [m, rate] = factor(a);
    return m * std::exp(-rate);
  });
  return {std::move(occ), std::move(term)};
}

namespace {

void require_in_band(const GridFunction& y, const char* what) {
  for (double v : y.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(what) + ": state leaves [0, 1]");
  }
}

}  // namespace

GridFunction random_in_set_state(std::size_t n, std::size_t modes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> y(n);
  if (modes == 0) {
    for (auto& v : y) v = unit(rng);
    return GridFunction(std::move(y));
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> a(modes), b(modes);
  for (std::size_t k = 0; k < modes; ++k) {
    a[k] = normal(rng) / static_cast<double>(k + 1);
    b[k] = normal(rng) / static_cast<double>(k + 1);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n);
    double v = 0.0;
    for (std::size_t k = 0; k < modes; ++k) {
      const double w = 2.0 * std::numbers::pi * static_cast<double>(k + 1) * x;
      v += a[k] * std::cos(w) + b[k] * std::sin(w);
    }
    y[i] = v;
  }
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double ymin = *lo, span = *hi - *lo;
  const double left = 0.5 * unit(rng), right = 0.5 + 0.5 * unit(rng);
  for (auto& v : y) v = span > 0.0 ? left + (right - left) * (v - ymin) / span : 0.5 * (left + right);
  return GridFunction(std::move(y));
}

double contraction_check(const GridFunction& y1, const GridFunction& y2, double eps, double dt) {
  require_in_band(y1, "contraction_check");
  require_in_band(y2, "contraction_check");
  if (y1.size() != y2.size()) throw std::invalid_argument("contraction_check: grid sizes differ");
  std::vector<double> d(y1.size());
  auto dist = [&](const GridFunction& a, const GridFunction& b) {
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
    return l2_norm(d);
  };
  const double d0 = dist(y1, y2);
  if (!(d0 > 0.0)) throw std::invalid_argument("contraction_check: initial states coincide");
  const auto t1 = fd_solve(y1, eps, dt);
  const auto t2 = fd_solve(y2, eps, dt);
  double ratio = 0.0;
  for (std::size_t q = 0; q < t1.times.size(); ++q) {
    ratio = std::max(ratio, dist(t1.states[q], t2.states[q]) / (std::exp(eps * t1.times[q]) * d0));
  }
  return ratio;
}

std::pair<double, double> invariance_check(const GridTrajectory& traj) {
  traj.validate();
  require_in_band(traj.states.front(), "invariance_check");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : traj.states) {
    for (double v : s.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

DissipativityResult dissipativity_check(const GridFunction& y0, double dt, double tol) {
  const auto traj = fd_solve(y0, 0.0, dt);
  DissipativityResult r;
  r.max_increase = -INFINITY;
  for (const auto& s : traj.states) r.norms.push_back(l2_norm(s.values()));
  for (std::size_t i = 1; i < r.norms.size(); ++i) r.max_increase = std::max(r.max_increase, r.norms[i] - r.norms[i - 1]);
  r.monotone = r.max_increase <= tol;
  return r;
}

NogapResult nogap_check(const GridFunction& y0, double eps, const Solution& sol, const OracleOptions& opts,
                        double rel_tol) {
  OracleOptions o = opts;
  o.grid = y0.size();
  const auto em = pushforward_moments(DiracAtFunction{y0}, sol.occupation.caps(), sol.terminal.caps(), eps, o);
  return {compare_moments(sol.occupation, em.occ, rel_tol), compare_moments(sol.terminal, em.term, rel_tol)};
}

}  // namespace rdsos
