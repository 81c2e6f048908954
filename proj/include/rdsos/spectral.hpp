#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "rdsos/polynomial.hpp"

namespace rdsos {

/// Samples of a real periodic function on the uniform grid x_i = i/N.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }

  /// Samples `fn(x)` at x_i = i/N.
  template <typename Fn>
  static GridFunction sample(std::size_t n, Fn&& fn) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = fn(static_cast<double>(i) / static_cast<double>(n));
    }
    return GridFunction(std::move(v));
  }

 private:
  std::vector<double> values_;
};

/// Truncated Fourier coefficients c_k = \int_0^1 z(x) e^{-2 pi i k x} dx for
/// |k| <= K. Only k >= 1 is stored; c_{-k} = conj(c_k).
class FourierVector {
 public:
  FourierVector() = default;
  explicit FourierVector(std::size_t cutoff) : modes_(cutoff) {}
  FourierVector(double c0, std::vector<std::complex<double>> modes)
      : c0_(c0), modes_(std::move(modes)) {}

  std::size_t cutoff() const { return modes_.size(); }

  double c0() const { return c0_; }
  void set_c0(double v) { c0_ = v; }

  /// Coefficient for any integer mode; zero outside [-K, K].
  std::complex<double> coeff(long k) const;
  /// Sets c_k for 1 <= k <= K.
  void set_mode(std::size_t k, std::complex<double> v) { modes_.at(k - 1) = v; }

  /// Same coefficients, zero-padded (or truncated) to a new cutoff.
  FourierVector resized(std::size_t cutoff) const;

 private:
  double c0_ = 0.0;
  std::vector<std::complex<double>> modes_;
};

/// Real parametrization (u0, u1, v1, ..., uK, vK), u_k = Re c_k, v_k = Im c_k.
using RealCoordinates = std::vector<double>;

/// Number of real coordinates 1 + 2K.
constexpr std::size_t real_dimension(std::size_t cutoff) { return 1 + 2 * cutoff; }
/// Position of u_k (k >= 0) within RealCoordinates.
constexpr int coord_u(std::size_t k) { return k == 0 ? 0 : static_cast<int>(2 * k - 1); }
/// Position of v_k (k >= 1) within RealCoordinates.
constexpr int coord_v(std::size_t k) { return static_cast<int>(2 * k); }
/// Fourier mode carried by a real coordinate id.
constexpr int coord_mode(int id) { return (id + 1) / 2; }

RealCoordinates to_real(const FourierVector& f);
FourierVector from_real(std::span<const double> x);

/// Discrete Fourier transform restricted to |k| <= K. Requires N >= 2K + 1.
FourierVector dft(const GridFunction& g, std::size_t cutoff);
/// Synthesis on N points. Requires N >= 2K + 1.
GridFunction idft(const FourierVector& f, std::size_t n);

/// Precomputed twiddles for repeated transforms of the same (N, K) pair.
class DftPlan {
 public:
  DftPlan(std::size_t n, std::size_t cutoff);
  std::size_t grid_size() const { return n_; }
  std::size_t cutoff() const { return cutoff_; }
  /// Writes the real coordinates of the transform into `out` (size 1 + 2K).
  void forward_real(std::span<const double> g, std::span<double> out) const;

 private:
  std::size_t n_;
  std::size_t cutoff_;
  std::vector<double> cos_;  // cos_[k * n + i]
  std::vector<double> sin_;
};

/// Modes |k| <= K of z^2, summing only pairs with |l| <= K and |k - l| <= K.
FourierVector quad_convolution(const FourierVector& f);

/// Fourier coefficients of y_xx + eps * y * (1 - y) under the truncation of
/// quad_convolution.
FourierVector drift(const FourierVector& f, double eps);

/// One polynomial per real coordinate, such that evaluating the list at
/// to_real(f) reproduces to_real(drift(f, eps)).
std::vector<Polynomial> drift_polynomials(std::size_t cutoff, double eps);

}  // namespace rdsos
