#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "rdsos/liouville.hpp"
#include "rdsos/oracle.hpp"
#include "rdsos/relaxation.hpp"

using namespace rdsos;

namespace {

GridFunction constant(double v) {
  return GridFunction::sample(8, [v](double) { return v; });
}

RelaxationOptions opts(int r, int h, std::size_t k, double eps) {
  RelaxationOptions o;
  o.order = r;
  o.harmonic = h;
  o.cutoff = k;
  o.eps = eps;
  return o;
}

MomentSequence initial_for(const RelaxationOptions& o, const InitialMeasureSpec& spec) {
  return initial_moments(spec, {2 * moment_order(o.order), o.harmonic, o.cutoff, false});
}

Solution solve_dirac(const RelaxationOptions& o, double level, const SolverOptions& so = {}) {
  const DiracAtFunction spec{constant(level)};
  const auto init = initial_for(o, spec);
  const auto p = build_relaxation(o, init, default_radius_squared(spec, o.cutoff));
  return solve(p, so, &init);
}

}  // namespace

TEST(MomentOrder, Examples) {
  EXPECT_EQ(moment_order(1), 1);
  EXPECT_EQ(moment_order(2), 2);
  EXPECT_EQ(moment_order(3), 2);
  EXPECT_EQ(moment_order(4), 3);
}

TEST(DefaultRadius, Examples) {
  EXPECT_DOUBLE_EQ(default_radius_squared(DiracAtFunction{constant(0.5)}, 0), 1.5);
  EXPECT_DOUBLE_EQ(default_radius_squared(GaussianProduct{{0.0, 0.0, 0.0}, {0.1, 0.1, 0.1}}, 1), 1.27);
  const Ensemble e{{constant(0.0), constant(1.0)}, {0.5, 0.5}};
  EXPECT_DOUBLE_EQ(default_radius_squared(e, 0), 3.0);
}

TEST(BuildRelaxation, DimensionsAtOrderTwo) {
  const auto p = build_relaxation(opts(2, 0, 0, 0.1), DiracAtFunction{constant(0.5)});
  EXPECT_EQ(p.moment_order, 2);
  EXPECT_EQ(p.occ_vars.size(), 15u);  // (t, u0) up to degree 4
  EXPECT_EQ(p.term_vars.size(), 5u);
  EXPECT_EQ(p.num_liouville, test_indices(2, 0, 0).size());
  EXPECT_EQ(p.num_slack, p.num_liouville);
  ASSERT_EQ(p.blocks.size(), 5u);
  EXPECT_EQ(p.blocks[0].dim, 6u);
  EXPECT_EQ(p.blocks[1].dim, 3u);
  EXPECT_EQ(p.blocks[2].dim, 3u);
  EXPECT_EQ(p.blocks[3].dim, 3u);
  EXPECT_EQ(p.blocks[4].dim, 2u);
  // Two masses and time marginals up to degree 2s.
  EXPECT_EQ(p.equalities.size(), p.num_liouville + 2 + 4);
  EXPECT_NO_THROW(p.validate());
}

TEST(BuildRelaxation, DimensionsAtFullSize) {
  const auto p = build_relaxation(opts(4, 4, 4, 0.1), isotropic_gaussian(4, 0.1));
  EXPECT_EQ(p.blocks[0].dim, 286u);  // C(13, 3)
  EXPECT_EQ(p.blocks[3].dim, 220u);  // C(12, 3)
  EXPECT_EQ(p.num_liouville, 1000u);
  const auto j = p.manifest();
  EXPECT_EQ(j["equalities"]["liouville"].get<std::size_t>(), 1000u);
}

TEST(BuildRelaxation, RejectsBadOptions) {
  const DiracAtFunction spec{constant(0.5)};
  EXPECT_THROW(build_relaxation(opts(1, 0, 0, 0.1), spec), std::invalid_argument);
  EXPECT_THROW(build_relaxation(opts(2, -1, 0, 0.1), spec), std::invalid_argument);
  EXPECT_THROW(build_relaxation(opts(2, 0, 0, -0.1), spec), std::invalid_argument);
  auto o = opts(2, 0, 0, 0.1);
  o.objective_scale = 0.0;
  EXPECT_THROW(build_relaxation(o, spec), std::invalid_argument);
  o = opts(2, 0, 0, 0.1);
  o.radius = -1.0;
  EXPECT_THROW(build_relaxation(o, spec), std::invalid_argument);
  // Initial moments must cover degree 2s.
  const auto shallow = initial_moments(spec, {2, 0, 0, false});
  EXPECT_THROW(build_relaxation(opts(4, 0, 0, 0.1), shallow, 1.5), std::exception);
}

TEST(BuildRelaxation, MomentMatrixOfExactMomentsIsPsd) {
  const auto g = isotropic_gaussian(1, 0.1);
  const auto p = build_relaxation(opts(4, 1, 1, 0.0), g);
  const auto [o, t] = heat_gaussian_moments(g, p.occ_caps, p.term_caps);
  const auto x = pack_moments(p, o, t);
  const auto rep = evaluate_point(p, x);
  EXPECT_LT(rep.max_residual, 1e-8);
  EXPECT_LT(rep.max_hard_violation, 1e-10);
  for (double e : rep.block_min_eigenvalues) EXPECT_GT(e, -1e-10);
}

TEST(Solve, EquilibriaAreFixedPoints) {
  for (double level : {0.0, 1.0}) {
    const auto sol = solve_dirac(opts(2, 1, 1, 0.1), level);
    EXPECT_EQ(sol.report.status, SolveStatus::kSolved) << level;
    EXPECT_LE(sol.report.objective, 1e-8);
    EXPECT_LE(sol.report.max_residual, 1e-6);
    EXPECT_NEAR(sol.terminal.at(MultiIndex::coordinate(0, 2)), level, 1e-6);
  }
}

TEST(Solve, LogisticMomentsFromConstantState) {
  const auto o = opts(4, 0, 0, 0.1);
  const auto sol = solve_dirac(o, 0.5);
  ASSERT_EQ(sol.report.status, SolveStatus::kSolved);
  const auto [ro, rt] = logistic_moments(0.5, 0.1, sol.occupation.caps(), sol.terminal.caps());
  for (int j = 0; j <= 2; ++j) {
    const auto a = MultiIndex::coordinate(0, j);
    EXPECT_NEAR(sol.terminal.at(a), rt.at(a), 1e-3 * std::abs(rt.at(a))) << j;
    EXPECT_NEAR(sol.occupation.at(a), ro.at(a), 1e-3 * std::abs(ro.at(a))) << j;
  }
}

TEST(Solve, InvariantsAtSolution) {
  const auto sol = solve_dirac(opts(3, 0, 0, 0.1), 0.3);
  ASSERT_EQ(sol.report.status, SolveStatus::kSolved);
  EXPECT_NEAR(sol.occupation.at(MultiIndex()), 1.0, 1e-6);
  EXPECT_NEAR(sol.terminal.at(MultiIndex()), 1.0, 1e-6);
  EXPECT_LT(sol.report.max_hard_violation, 1e-6);
  EXPECT_GT(sol.report.min_eigenvalue, -1e-5);
  EXPECT_EQ(sol.report.block_min_eigenvalues.size(), 5u);
  const auto j = sol.report.to_json();
  EXPECT_EQ(j["status"], "solved");
}

TEST(Solve, ObjectiveScaleDoesNotMoveTheSolution) {
  // Without a ridge the minimizers form a face; a ridge makes the minimizer
  // unique, and scaling both weights together must leave it in place.
  SolverOptions so;
  so.tol_rel = 1e-10;
  so.tol_abs = 1e-13;
  so.max_iterations = 200000;
  auto o = opts(2, 0, 0, 0.1);
  o.objective_scale = 1.0;
  o.ridge = 1e-4;
  const auto a = solve_dirac(o, 0.5, so);
  o.objective_scale = 10.0;
  o.ridge = 1e-3;
  const auto b = solve_dirac(o, 0.5, so);
  ASSERT_EQ(a.report.status, SolveStatus::kSolved);
  ASSERT_EQ(b.report.status, SolveStatus::kSolved);
  EXPECT_EQ(compare_moments(b.terminal, a.terminal, 1e-4).fraction, 1.0);
  EXPECT_EQ(compare_moments(b.occupation, a.occupation, 1e-4).fraction, 1.0);

  // Without a ridge both scales still reach the zero-residual face.
  o.ridge = 0.0;
  for (double scale : {1.0, 10.0}) {
    o.objective_scale = scale;
    const auto c = solve_dirac(o, 0.5, so);
    EXPECT_EQ(c.report.status, SolveStatus::kSolved);
    EXPECT_LT(c.report.objective, 1e-10) << scale;
  }
}

TEST(Solve, HigherOrderRestrictsToLowerOrder) {
  // Rows and blocks of order r are rows and principal submatrices of order
  // r + 2, so any point of the larger problem restricts to a point at least
  // as good.
  std::mt19937_64 rng(23);
  std::normal_distribution<double> noise(0.0, 1e-3);
  const auto g = isotropic_gaussian(1, 0.1);
  const auto big = build_relaxation(opts(4, 1, 1, 0.1), g);
  const auto small = build_relaxation(opts(2, 1, 1, 0.1), g);
  auto x = frozen_guess(big, initial_for(big.options, g));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(big.num_moments()); ++i) x[i] += noise(rng);
  const auto [o, t] = split_moments(big, x);
  const auto xb = pack_moments(big, o, t);
  const auto xs = pack_moments(small, o, t);
  const auto rb = evaluate_point(big, xb);
  const auto rs = evaluate_point(small, xs);
  EXPECT_LE(rs.objective, rb.objective * (1 + 1e-12) + 1e-18);
  EXPECT_GE(rs.block_min_eigenvalues[0], rb.block_min_eigenvalues[0] - 1e-12);
  EXPECT_GE(rs.block_min_eigenvalues[3], rb.block_min_eigenvalues[3] - 1e-12);
}

TEST(Solve, IterationLimitIsReported) {
  SolverOptions so;
  so.max_iterations = 5;
  const auto o = opts(3, 0, 0, 0.1);
  const DiracAtFunction spec{constant(0.3)};
  const auto p = build_relaxation(o, spec);
  const auto sol = solve(p, so);
  EXPECT_EQ(sol.report.status, SolveStatus::kIterationLimit);
  EXPECT_EQ(sol.report.iterations, 5);
}

TEST(Solve, UnknownBackend) {
  EXPECT_THROW(make_backend("mosek"), std::invalid_argument);
  EXPECT_EQ(available_backends(), std::vector<std::string>{"admm"});
  SolverOptions so;
  so.backend = "nope";
  const auto p = build_relaxation(opts(2, 0, 0, 0.1), DiracAtFunction{constant(0.3)});
  EXPECT_THROW(solve(p, so), std::invalid_argument);
}

TEST(Sdpa, DimensionsAndRoundTrip) {
  auto o = opts(2, 1, 1, 0.1);
  const auto p = build_relaxation(o, isotropic_gaussian(1, 0.1));
  const auto s = to_sdpa(p);
  EXPECT_EQ(s.num_vars, p.num_vars() + 1);
  ASSERT_EQ(s.block_struct.size(), p.blocks.size() + 2);
  EXPECT_EQ(s.block_struct[0], -2 * static_cast<long>(p.equalities.size()));
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    EXPECT_EQ(s.block_struct[k + 1], static_cast<long>(p.blocks[k].dim));
  }
  EXPECT_EQ(s.block_struct.back(), static_cast<long>(1 + p.num_slack));
  std::ostringstream a;
  write_sdpa(s, a);
  std::istringstream in(a.str());
  const auto back = read_sdpa(in);
  std::ostringstream b;
  write_sdpa(back, b);
  EXPECT_EQ(a.str(), b.str());

  o.ridge = 1e-3;
  const auto pr = build_relaxation(o, isotropic_gaussian(1, 0.1));
  EXPECT_EQ(to_sdpa(pr).block_struct.back(), static_cast<long>(1 + pr.num_slack + pr.num_moments()));
}

TEST(Sdpa, EvaluateMatchesProblemBlocks) {
  const auto g = isotropic_gaussian(1, 0.1);
  const auto p = build_relaxation(opts(2, 1, 1, 0.1), g);
  std::mt19937_64 rng(29);
  std::normal_distribution<double> noise(0.0, 1e-2);
  auto x = frozen_guess(p, initial_for(p.options, g));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += noise(rng);
  const auto s = to_sdpa(p);
  const auto y = sdpa_point(p, x);
  const auto mats = s.evaluate(y);
  ASSERT_EQ(mats.size(), s.block_struct.size());
  for (std::size_t r = 0; r < p.equalities.size(); ++r) {
    double ax = 0.0;
    for (const auto& [v, c] : p.equalities[r].coeffs) ax += c * x[static_cast<Eigen::Index>(v)];
    const double d = ax - p.equalities[r].rhs;
    EXPECT_NEAR(mats[0](static_cast<Eigen::Index>(2 * r), 0), d, 1e-12);
    EXPECT_NEAR(mats[0](static_cast<Eigen::Index>(2 * r + 1), 0), -d, 1e-12);
  }
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    EXPECT_LT((mats[k + 1] - block_matrix(p.blocks[k], x)).cwiseAbs().maxCoeff(), 1e-12) << k;
  }
  // tau equals the objective, so the epigraph block is singular PSD.
  EXPECT_NEAR(min_eigenvalue(mats.back()), 0.0, 1e-8);
  const double tau = y[y.size() - 1];
  double obj = 0.0;
  for (std::size_t r = 0; r < p.num_slack; ++r) {
    const double e = x[static_cast<Eigen::Index>(p.slack_offset() + r)];
    obj += e * e;
  }
  EXPECT_NEAR(tau, p.options.objective_scale * obj, 1e-9 * (1 + tau));
}

TEST(Sdpa, ReaderRejectsMalformedInput) {
  std::istringstream bad("2\n1\n2\n1 0\n1 2 1 1 1.0\n");
  EXPECT_THROW(read_sdpa(bad), std::invalid_argument);
  std::istringstream offdiag("1\n1\n-2\n1\n1 1 1 2 1.0\n");
  EXPECT_THROW(read_sdpa(offdiag), std::invalid_argument);
  std::istringstream merged("1\n1\n2\n1\n1 1 1 2 0.5\n1 1 2 1 0.25\n");
  const auto p = read_sdpa(merged);
  ASSERT_EQ(p.entries.size(), 1u);
  EXPECT_EQ(p.entries[0].value, 0.75);
}

TEST(CompareMoments, Examples) {
  const MomentCaps caps{2, 0, 0, false};
  MomentSequence ref(caps), got(caps);
  const auto u = [](int e) { return MultiIndex::coordinate(0, e); };
  ref.set(MultiIndex(), 1.0);
  ref.set(u(1), 0.5);
  ref.set(u(2), 1e-12);
  got.set(MultiIndex(), 1.0005);
  got.set(u(1), 0.49);
  got.set(u(2), 1e-11);
  const auto m = compare_moments(got, ref, 1e-3);
  EXPECT_EQ(m.shared, 3u);
  EXPECT_EQ(m.matched, 1u);
  EXPECT_NEAR(m.fraction, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(m.worst.front().index, u(1));
  // The floor absorbs tiny references.
  EXPECT_EQ(compare_moments(got, ref, 1e-2, 1e-8).matched, 2u);
  EXPECT_EQ(compare_moments(got, ref, 3e-2, 1e-8).matched, 3u);

  MomentSequence other(caps);
  EXPECT_THROW(compare_moments(other, ref, 1e-3), std::invalid_argument);
  EXPECT_THROW(compare_moments(got, ref, 0.0), std::invalid_argument);
}
