#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "rdsos/moment_io.hpp"
#include "rdsos/moments.hpp"

using namespace rdsos;

namespace {

MultiIndex u(int id, int e = 1) { return MultiIndex::coordinate(id, e); }

MomentSequence lebesgue_time(int degree) {
  return MomentSequence::filled({degree, 0, 0, true}, [](const MultiIndex& a) {
    return a.spatial().empty() ? 1.0 / (a.time() + 1) : 0.0;
  });
}

}  // namespace

TEST(MultiIndex, DegreesAndKeys) {
  const MultiIndex a(2, {{3, 2}, {0, 1}});
  EXPECT_EQ(a.degree(), 5);
  EXPECT_EQ(a.spatial_degree(), 3);
  EXPECT_EQ(a.harmonic_degree(), 2);
  EXPECT_EQ(a.exponent(3), 2);
  EXPECT_EQ(a.exponent(1), 0);
  EXPECT_EQ(a.spatial_key(), "0:1;3:2");
  EXPECT_EQ(MultiIndex::from_key(2, a.spatial_key()), a);
  EXPECT_EQ(a.to_string(), "t^2*u0*u2^2");
  EXPECT_EQ(MultiIndex().to_string(), "1");
  EXPECT_EQ(MultiIndex(0, {{0, 3}}).harmonic_degree(), 0);
  EXPECT_THROW(MultiIndex(-1, {}), std::invalid_argument);
  EXPECT_THROW(MultiIndex::from_key(0, "1:x"), std::invalid_argument);
}

TEST(MultiIndex, ProductAndLowering) {
  const auto p = u(1) * MultiIndex(1, {{1, 1}, {2, 1}});
  EXPECT_EQ(p, MultiIndex(1, {{1, 2}, {2, 1}}));
  EXPECT_EQ(*p.lowered(2), MultiIndex(1, {{1, 2}}));
  EXPECT_FALSE(p.lowered(0).has_value());
  const double x[] = {2.0, 3.0, 5.0};
  EXPECT_DOUBLE_EQ(p.evaluate(0.5, x), 0.5 * 9.0 * 5.0);
}

TEST(EnumerateMonomials, Examples) {
  const auto two = enumerate_monomials({true, 0}, 2, 0);  // (t, u0)
  ASSERT_EQ(two.size(), 6u);
  EXPECT_EQ(two[0], MultiIndex());
  EXPECT_EQ(two[1], MultiIndex::time_power(1));
  EXPECT_EQ(two[2], u(0));
  EXPECT_EQ(two[3], MultiIndex::time_power(2));
  EXPECT_EQ(two[4], MultiIndex(1, {{0, 1}}));
  EXPECT_EQ(two[5], u(0, 2));
  EXPECT_EQ(enumerate_monomials({false, 0}, 3, 0).size(), 4u);
  EXPECT_EQ(enumerate_monomials({true, 4}, 2, 4).size(), 66u);
}

TEST(EnumerateMonomials, CountsMatchBinomials) {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cutoff = rng() % 4;
    const bool time = rng() % 2;
    const int d = static_cast<int>(rng() % 5);
    const int h = static_cast<int>(rng() % 5);
    const VariableSet vars{time, cutoff};
    const auto n = static_cast<int>(vars.count(h));
    const auto list = enumerate_monomials(vars, d, h);
    EXPECT_EQ(static_cast<double>(list.size()), binomial(n + d, d));
    for (std::size_t i = 1; i < list.size(); ++i) EXPECT_LT(list[i - 1], list[i]);
    for (const auto& a : list) {
      EXPECT_LE(a.degree(), d);
      EXPECT_LE(a.harmonic_degree(), h);
    }
  }
}

TEST(EnumerateMonomials, HarmonicFilter) {
  // K = 2 and h = 1 keep u0, u1, v1.
  EXPECT_EQ(VariableSet({false, 2}).count(1), 3u);
  EXPECT_EQ(enumerate_monomials({false, 2}, 2, 1).size(), 10u);
}

TEST(MomentSequence, CapsEnforced) {
  MomentSequence m({2, 1, 1, false});
  EXPECT_THROW(m.set(u(0, 3), 1.0), CapViolation);
  EXPECT_THROW(m.set(MultiIndex::time_power(1), 1.0), CapViolation);
  EXPECT_THROW(m.at(u(0)), MissingMoment);
  try {
    m.at(u(3));
    FAIL();
  } catch (const CapViolation& e) {
    EXPECT_EQ(e.index(), u(3));
  }
}

TEST(Riesz, Examples) {
  const MomentCaps caps{3, 0, 0, true};
  const double x[] = {0.4};
  const auto dirac = MomentSequence::dirac(caps, 0.25, x);
  EXPECT_DOUBLE_EQ(riesz(Polynomial::constant(1.0), dirac), 1.0);
  EXPECT_DOUBLE_EQ(riesz(Polynomial::monomial(MultiIndex::time_power(2), 3.0), lebesgue_time(3)), 1.0);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> c(-1, 1);
  Polynomial p;
  for (const auto& a : enumerate_monomials(caps.variables(), 3, 0)) p.add_term(a, c(rng));
  EXPECT_NEAR(riesz(p, dirac), p.evaluate(0.25, x), 1e-14);

  EXPECT_THROW(riesz(Polynomial::monomial(u(0, 4)), dirac), CapViolation);
}

TEST(Riesz, Linear) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> c(-1, 1);
  const MomentCaps caps{3, 1, 1, true};
  const auto idx = enumerate_monomials(caps.variables(), 3, 1);
  const auto m = MomentSequence::filled(caps, [&](const MultiIndex&) { return c(rng); });
  for (int trial = 0; trial < 20; ++trial) {
    Polynomial p, q;
    for (const auto& a : idx) {
      if (rng() % 3 == 0) p.add_term(a, c(rng));
      if (rng() % 3 == 0) q.add_term(a, c(rng));
    }
    const double alpha = c(rng);
    EXPECT_NEAR(riesz(p * alpha + q, m), alpha * riesz(p, m) + riesz(q, m), 1e-12);
  }
}

TEST(MomentMatrix, HankelForm) {
  const MomentCaps caps{2, 0, 0, false};
  const auto t = moment_matrix(1, caps);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.entry(0, 0), (std::vector<TemplateTerm>{{MultiIndex(), 1.0}}));
  EXPECT_EQ(t.entry(0, 1), (std::vector<TemplateTerm>{{u(0), 1.0}}));
  EXPECT_EQ(&t.entry(1, 0), &t.entry(0, 1));
  EXPECT_EQ(t.entry(1, 1), (std::vector<TemplateTerm>{{u(0, 2), 1.0}}));
  EXPECT_THROW(moment_matrix(2, caps), CapViolation);
}

TEST(MomentMatrix, DiracIsRankOne) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> c(-1, 1);
  const MomentCaps caps{4, 1, 1, false};
  const auto t = moment_matrix(2, caps);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<double> q{c(rng), c(rng), c(rng)};
    const auto m = evaluate_template(t, MomentSequence::dirac(caps, 0.0, q));
    Eigen::VectorXd v(static_cast<Eigen::Index>(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i) v[static_cast<Eigen::Index>(i)] = t.basis()[i].evaluate(0.0, q);
    EXPECT_LT((m - v * v.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_GE(min_eigenvalue(m), -1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    EXPECT_LT(es.eigenvalues()[es.eigenvalues().size() - 2], 1e-12);
  }
}

TEST(MomentMatrix, HilbertMatrixFromLebesgue) {
  const MomentCaps caps{4, 0, 0, true};
  const auto t = moment_matrix(2, caps);
  const auto m = evaluate_template(t, lebesgue_time(4));
  // Keep the rows of the pure time monomials 1, t, t^2.
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.basis()[i].spatial().empty()) rows.push_back(static_cast<Eigen::Index>(i));
  }
  ASSERT_EQ(rows.size(), 3u);
  Eigen::Matrix3d h;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      h(i, j) = m(rows[i], rows[j]);
      EXPECT_DOUBLE_EQ(h(i, j), 1.0 / (i + j + 1));
    }
  }
  EXPECT_GT(min_eigenvalue(h), 0.0);
}

TEST(LocalizingMatrix, Examples) {
  const MomentCaps caps{4, 1, 1, true};
  const auto plain = moment_matrix(2, caps);
  const auto one = localizing_matrix(Polynomial::constant(1.0), 2, caps);
  ASSERT_EQ(plain.size(), one.size());
  for (std::size_t j = 0; j < plain.size(); ++j) {
    for (std::size_t i = 0; i <= j; ++i) EXPECT_EQ(plain.entry(i, j), one.entry(i, j));
  }

  const MomentCaps sc{4, 1, 1, false};
  Polynomial ball = Polynomial::constant(4.0);
  for (int id = 0; id < 3; ++id) ball.add_term(u(id, 2), -1.0);
  const std::vector<double> q{0.5, -1.0, 0.7};
  const auto lm = evaluate_template(localizing_matrix(ball, 1, sc), MomentSequence::dirac(sc, 0.0, q));
  EXPECT_GE(min_eigenvalue(lm), -1e-14);

  Polynomial window;
  window.add_term(MultiIndex::time_power(1), 1.0);
  window.add_term(MultiIndex::time_power(2), -1.0);
  const MomentCaps tc{4, 0, 0, true};
  const double zero[] = {0.0};
  const auto bad = evaluate_template(localizing_matrix(window, 1, tc), MomentSequence::dirac(tc, 2.0, zero));
  EXPECT_LT(min_eigenvalue(bad), 0.0);

  const auto leb = evaluate_template(localizing_matrix(window, 1, tc), lebesgue_time(4));
  EXPECT_DOUBLE_EQ(leb(0, 0), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(leb(0, 1), 1.0 / 12.0);  // int t^2 (1 - t)

  EXPECT_THROW(localizing_matrix(window, 2, tc), CapViolation);
}

TEST(EvaluateTemplate, Examples) {
  const MomentCaps caps{2, 0, 0, false};
  const double half[] = {0.5};
  const auto m = evaluate_template(moment_matrix(1, caps), MomentSequence::dirac(caps, 0.0, half));
  EXPECT_DOUBLE_EQ(m(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(m(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(m(1, 1), 0.25);

  const auto mass = MomentSequence::filled(caps, [](const MultiIndex& a) { return a.is_zero() ? 1.0 : 0.0; });
  const auto e = evaluate_template(moment_matrix(1, caps), mass);
  EXPECT_EQ(e(0, 0), 1.0);
  EXPECT_EQ(e(0, 1), 0.0);
  EXPECT_EQ(e(1, 1), 0.0);

  MomentSequence partial(caps);
  partial.set(MultiIndex(), 1.0);
  EXPECT_THROW(evaluate_template(moment_matrix(1, caps), partial), MissingMoment);
}

TEST(MomentMatrix, EmpiricalMixturesArePsd) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 0.5);
  const MomentCaps caps{4, 1, 1, false};
  const auto idx = enumerate_monomials(caps.variables(), 4, 1);
  MomentSequence m(caps);
  std::vector<std::vector<double>> pts(25, std::vector<double>(3));
  for (auto& p : pts) {
    for (auto& v : p) v = n(rng);
  }
  for (const auto& a : idx) {
    double s = 0.0;
    for (const auto& p : pts) s += a.evaluate(0.0, p) / static_cast<double>(pts.size());
    m.set(a, s);
  }
  EXPECT_GE(min_eigenvalue(evaluate_template(moment_matrix(2, caps), m)), -1e-9);
}

TEST(MomentIo, CsvAndJsonRoundTripExactly) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> c(-1, 1);
  const MomentCaps caps{3, 1, 1, true};
  auto m = MomentSequence::filled(caps, [&](const MultiIndex&) { return c(rng) * 1e-3; });
  m.set(u(0), std::numeric_limits<double>::denorm_min());
  m.set(u(1), 1.0 / 3.0);

  std::stringstream ss;
  write_moments_csv(m, ss);
  const auto back = read_moments_csv(ss);
  EXPECT_EQ(back.caps(), m.caps());
  EXPECT_EQ(back.entries(), m.entries());

  const auto jb = moments_from_json(nlohmann::json::parse(moments_to_json(m).dump()));
  EXPECT_EQ(jb.caps(), m.caps());
  EXPECT_EQ(jb.entries(), m.entries());

  std::stringstream again;
  write_moments_csv(back, again);
  std::stringstream first;
  write_moments_csv(m, first);
  EXPECT_EQ(again.str(), first.str());
}

TEST(MomentIo, RejectsMalformedInput) {
  std::stringstream missing("a0,spatial,value\n0,,1\n");
  EXPECT_THROW(read_moments_csv(missing), std::invalid_argument);
  std::stringstream dup("# caps max_degree=1 max_harmonic=0 cutoff=0 time=0\na0,spatial,value\n0,,1\n0,,1\n");
  EXPECT_THROW(read_moments_csv(dup), std::invalid_argument);
  std::stringstream over("# caps max_degree=1 max_harmonic=0 cutoff=0 time=0\na0,spatial,value\n0,0:2,1\n");
  EXPECT_THROW(read_moments_csv(over), CapViolation);
}
