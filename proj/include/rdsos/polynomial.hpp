#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rdsos {

/// Exponent vector over time and real Fourier coordinates.
///
/// The spatial part is a sparse list of (coordinate id, exponent) pairs sorted
/// by id with strictly positive exponents. Coordinate ids follow the layout of
/// RealCoordinates: 0 is u0, 2k-1 is u_k and 2k is v_k.
///
/// Ordering (operator<) is graded lexicographic: lower total degree first;
/// within a degree, the larger time exponent first, then the larger exponent
/// on the lowest coordinate id first. For two variables of degree two this
/// lists x1^2, x1 x2, x2^2.
class MultiIndex {
 public:
  using Entry = std::pair<int, int>;

  MultiIndex() = default;
  /// Normalizes: merges duplicate ids, drops zero exponents. Throws
  /// std::invalid_argument on negative exponents or ids.
  MultiIndex(int time, std::vector<Entry> spatial);

  static MultiIndex time_power(int exponent) { return MultiIndex(exponent, {}); }
  static MultiIndex coordinate(int id, int exponent = 1) {
    return MultiIndex(0, {{id, exponent}});
  }

  int time() const { return time_; }
  const std::vector<Entry>& spatial() const { return spatial_; }
  int exponent(int coord) const;

  int degree() const { return time_ + spatial_degree(); }
  int spatial_degree() const;
  /// Largest Fourier mode with a nonzero exponent; 0 for u0 / time only.
  int harmonic_degree() const;
  /// Largest coordinate id present, or -1.
  int max_coordinate() const;
  bool is_zero() const { return time_ == 0 && spatial_.empty(); }

  MultiIndex operator*(const MultiIndex& other) const;
  MultiIndex with_time(int exponent) const;
  MultiIndex without_time() const { return with_time(0); }
  /// Lowers the exponent of `coord` by one; nullopt if it is zero.
  std::optional<MultiIndex> lowered(int coord) const;

  /// t^time * prod x[id]^exp.
  double evaluate(double t, std::span<const double> x) const;

  /// Canonical spatial key, e.g. "0:1;3:2"; empty for no spatial factor.
  std::string spatial_key() const;
  static MultiIndex from_key(int time, std::string_view spatial_key);
  /// Human readable, e.g. "t^2*u0*v1^2".
  std::string to_string() const;

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) {
    return a.time_ == b.time_ && a.spatial_ == b.spatial_;
  }
  friend bool operator<(const MultiIndex& a, const MultiIndex& b);

 private:
  int time_ = 0;
  std::vector<Entry> spatial_;
};

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& a) const noexcept;
};

/// Name of a real coordinate id: "u0", "u1", "v1", ...
std::string coordinate_name(int id);

/// Sparse polynomial sum_a p_a (t, x)^a. Zero coefficients are never stored.
class Polynomial {
 public:
  using Terms = std::map<MultiIndex, double>;

  Polynomial() = default;
  static Polynomial constant(double c);
  static Polynomial monomial(const MultiIndex& a, double c = 1.0);

  const Terms& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }
  double coefficient(const MultiIndex& a) const;

  void add_term(const MultiIndex& a, double c);

  int degree() const;
  int harmonic_degree() const;
  double evaluate(double t, std::span<const double> x) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator*(double s) const;

 private:
  Terms terms_;
};

}  // namespace rdsos
