#include "rdsos/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rdsos {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_resolution(std::size_t n, std::size_t cutoff) {
  if (n < 2 * cutoff + 1) {
    throw std::invalid_argument("grid of " + std::to_string(n) +
                                " points cannot resolve cutoff K=" + std::to_string(cutoff) +
                                " (need N >= 2K+1)");
  }
}

double twiddle_angle(std::size_t k, std::size_t i, std::size_t n) {
  // Reduce k*i mod n first so large products keep full accuracy.
  return kTwoPi * static_cast<double>((k * i) % n) / static_cast<double>(n);
}

}  // namespace

GridFunction::GridFunction(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw std::invalid_argument("GridFunction needs N >= 2 samples");
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("GridFunction: non-finite sample");
  }
}

std::complex<double> FourierVector::coeff(long k) const {
  if (k == 0) return c0_;
  const auto ak = static_cast<std::size_t>(k < 0 ? -k : k);
  if (ak > modes_.size()) return 0.0;
  return k > 0 ? modes_[ak - 1] : std::conj(modes_[ak - 1]);
}

FourierVector FourierVector::resized(std::size_t cutoff) const {
  FourierVector out(cutoff);
  out.c0_ = c0_;
  for (std::size_t k = 0; k < std::min(cutoff, modes_.size()); ++k) out.modes_[k] = modes_[k];
  return out;
}

RealCoordinates to_real(const FourierVector& f) {
  RealCoordinates x(real_dimension(f.cutoff()));
  x[0] = f.c0();
  for (std::size_t k = 1; k <= f.cutoff(); ++k) {
    const auto c = f.coeff(static_cast<long>(k));
    x[coord_u(k)] = c.real();
    x[coord_v(k)] = c.imag();
  }
  return x;
}

FourierVector from_real(std::span<const double> x) {
  if (x.size() % 2 != 1) {
    throw std::invalid_argument("RealCoordinates must have odd length 1 + 2K");
  }
  const std::size_t cutoff = (x.size() - 1) / 2;
  FourierVector f(cutoff);
  f.set_c0(x[0]);
  for (std::size_t k = 1; k <= cutoff; ++k) f.set_mode(k, {x[coord_u(k)], x[coord_v(k)]});
  return f;
}

FourierVector dft(const GridFunction& g, std::size_t cutoff) {
  const std::size_t n = g.size();
  check_resolution(n, cutoff);
  FourierVector f(cutoff);
  double mean = 0.0;
  for (double v : g.values()) mean += v;
  f.set_c0(mean / static_cast<double>(n));
  for (std::size_t k = 1; k <= cutoff; ++k) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = twiddle_angle(k, i, n);
      re += g[i] * std::cos(a);
      im -= g[i] * std::sin(a);
    }
    f.set_mode(k, {re / static_cast<double>(n), im / static_cast<double>(n)});
  }
  return f;
}

GridFunction idft(const FourierVector& f, std::size_t n) {
  check_resolution(n, f.cutoff());
  std::vector<double> v(n, f.c0());
  for (std::size_t k = 1; k <= f.cutoff(); ++k) {
    const auto c = f.coeff(static_cast<long>(k));
    for (std::size_t i = 0; i < n; ++i) {
      const double a = twiddle_angle(k, i, n);
      v[i] += 2.0 * (c.real() * std::cos(a) - c.imag() * std::sin(a));
    }
  }
  return GridFunction(std::move(v));
}

DftPlan::DftPlan(std::size_t n, std::size_t cutoff)
    : n_(n), cutoff_(cutoff), cos_((cutoff + 1) * n), sin_((cutoff + 1) * n) {
  check_resolution(n, cutoff);
  for (std::size_t k = 0; k <= cutoff; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double a = twiddle_angle(k, i, n);
      cos_[k * n + i] = std::cos(a) / static_cast<double>(n);
      sin_[k * n + i] = -std::sin(a) / static_cast<double>(n);
    }
  }
}

void DftPlan::forward_real(std::span<const double> g, std::span<double> out) const {
  if (g.size() != n_ || out.size() != real_dimension(cutoff_)) {
    throw std::invalid_argument("DftPlan::forward_real: size mismatch");
  }
  double mean = 0.0;
  for (double v : g) mean += v;
  out[0] = mean / static_cast<double>(n_);
  for (std::size_t k = 1; k <= cutoff_; ++k) {
    const double* c = cos_.data() + k * n_;
    const double* s = sin_.data() + k * n_;
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      re += g[i] * c[i];
      im += g[i] * s[i];
    }
    out[coord_u(k)] = re;
    out[coord_v(k)] = im;
  }
}

FourierVector quad_convolution(const FourierVector& f) {
  const long cutoff = static_cast<long>(f.cutoff());
  FourierVector out(f.cutoff());
  for (long k = 0; k <= cutoff; ++k) {
    std::complex<double> acc = 0.0;
    for (long l = -cutoff; l <= cutoff; ++l) {
      const long m = k - l;
      if (m < -cutoff || m > cutoff) continue;
      acc += f.coeff(l) * f.coeff(m);
    }
    if (k == 0) {
      out.set_c0(acc.real());
    } else {
      out.set_mode(static_cast<std::size_t>(k), acc);
    }
  }
  return out;
}

FourierVector drift(const FourierVector& f, double eps) {
  if (eps < 0.0) throw std::invalid_argument("drift: reaction rate must be >= 0");
  const FourierVector sq = quad_convolution(f);
  FourierVector out(f.cutoff());
  out.set_c0(eps * f.c0() - eps * sq.c0());
  for (std::size_t k = 1; k <= f.cutoff(); ++k) {
    const double wave = kTwoPi * static_cast<double>(k);
    const auto ik = static_cast<long>(k);
    out.set_mode(k, (eps - wave * wave) * f.coeff(ik) - eps * sq.coeff(ik));
  }
  return out;
}

namespace {

// c_l as a complex linear form over real coordinates.
using ComplexPoly = std::map<MultiIndex, std::complex<double>>;

ComplexPoly mode_form(long l) {
  if (l == 0) return {{MultiIndex::coordinate(0), 1.0}};
  const auto k = static_cast<std::size_t>(l < 0 ? -l : l);
  const double sign = l > 0 ? 1.0 : -1.0;
  return {{MultiIndex::coordinate(coord_u(k)), {1.0, 0.0}},
          {MultiIndex::coordinate(coord_v(k)), {0.0, sign}}};
}

void accumulate(ComplexPoly& p, const MultiIndex& a, std::complex<double> c) {
  p[a] += c;
}

}  // namespace

std::vector<Polynomial> drift_polynomials(std::size_t cutoff, double eps) {
  if (eps < 0.0) throw std::invalid_argument("drift_polynomials: reaction rate must be >= 0");
  const long kmax = static_cast<long>(cutoff);
  std::vector<Polynomial> out(real_dimension(cutoff));
  for (long k = 0; k <= kmax; ++k) {
    ComplexPoly p;
    const double wave = kTwoPi * static_cast<double>(k);
    for (const auto& [a, c] : mode_form(k)) accumulate(p, a, (eps - wave * wave) * c);
    for (long l = -kmax; l <= kmax; ++l) {
      const long m = k - l;
      if (m < -kmax || m > kmax) continue;
      for (const auto& [a, ca] : mode_form(l)) {
        for (const auto& [b, cb] : mode_form(m)) accumulate(p, a * b, -eps * ca * cb);
      }
    }
    const auto uk = static_cast<std::size_t>(coord_u(static_cast<std::size_t>(k)));
    for (const auto& [a, c] : p) {
      out[uk].add_term(a, c.real());
      if (k > 0) out[static_cast<std::size_t>(coord_v(static_cast<std::size_t>(k)))].add_term(a, c.imag());
    }
  }
  return out;
}

}  // namespace rdsos
