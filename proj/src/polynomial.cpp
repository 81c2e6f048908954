#include "rdsos/polynomial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace rdsos {

MultiIndex::MultiIndex(int time, std::vector<Entry> spatial) : time_(time) {
  if (time < 0) throw std::invalid_argument("MultiIndex: negative time exponent");
  std::sort(spatial.begin(), spatial.end());
  for (const auto& [id, e] : spatial) {
    if (id < 0 || e < 0) {
      throw std::invalid_argument("MultiIndex: negative coordinate id or exponent");
    }
    if (e == 0) continue;
    if (!spatial_.empty() && spatial_.back().first == id) {
      spatial_.back().second += e;
    } else {
      spatial_.emplace_back(id, e);
    }
  }
}

int MultiIndex::exponent(int coord) const {
  auto it = std::lower_bound(spatial_.begin(), spatial_.end(), Entry{coord, 0});
  return (it != spatial_.end() && it->first == coord) ? it->second : 0;
}

int MultiIndex::spatial_degree() const {
  int d = 0;
  for (const auto& e : spatial_) d += e.second;
  return d;
}

int MultiIndex::harmonic_degree() const {
  return spatial_.empty() ? 0 : (spatial_.back().first + 1) / 2;
}

int MultiIndex::max_coordinate() const {
  return spatial_.empty() ? -1 : spatial_.back().first;
}

MultiIndex MultiIndex::operator*(const MultiIndex& other) const {
  MultiIndex out;
  out.time_ = time_ + other.time_;
  out.spatial_.reserve(spatial_.size() + other.spatial_.size());
  auto a = spatial_.begin();
  auto b = other.spatial_.begin();
  while (a != spatial_.end() || b != other.spatial_.end()) {
    if (b == other.spatial_.end() || (a != spatial_.end() && a->first < b->first)) {
      out.spatial_.push_back(*a++);
    } else if (a == spatial_.end() || b->first < a->first) {
      out.spatial_.push_back(*b++);
    } else {
      out.spatial_.emplace_back(a->first, a->second + b->second);
      ++a;
      ++b;
    }
  }
  return out;
}

MultiIndex MultiIndex::with_time(int exponent) const {
  MultiIndex out = *this;
  if (exponent < 0) throw std::invalid_argument("MultiIndex: negative time exponent");
  out.time_ = exponent;
  return out;
}

std::optional<MultiIndex> MultiIndex::lowered(int coord) const {
  auto it = std::lower_bound(spatial_.begin(), spatial_.end(), Entry{coord, 0});
  if (it == spatial_.end() || it->first != coord) return std::nullopt;
  MultiIndex out = *this;
  auto pos = out.spatial_.begin() + (it - spatial_.begin());
  if (--pos->second == 0) out.spatial_.erase(pos);
  return out;
}

double MultiIndex::evaluate(double t, std::span<const double> x) const {
  double v = 1.0;
  for (int i = 0; i < time_; ++i) v *= t;
  for (const auto& [id, e] : spatial_) {
    if (static_cast<std::size_t>(id) >= x.size()) {
      throw std::out_of_range("MultiIndex::evaluate: coordinate outside state vector");
    }
    for (int i = 0; i < e; ++i) v *= x[id];
  }
  return v;
}

std::string MultiIndex::spatial_key() const {
  std::string s;
  for (const auto& [id, e] : spatial_) {
    if (!s.empty()) s += ';';
    s += std::to_string(id);
    s += ':';
    s += std::to_string(e);
  }
  return s;
}

MultiIndex MultiIndex::from_key(int time, std::string_view key) {
  std::vector<Entry> entries;
  while (!key.empty()) {
    auto semi = key.find(';');
    auto part = key.substr(0, semi);
    auto colon = part.find(':');
    if (colon == std::string_view::npos) {
      throw std::invalid_argument("MultiIndex key: missing ':' in '" + std::string(part) + "'");
    }
    int id = 0;
    int e = 0;
    auto r1 = std::from_chars(part.data(), part.data() + colon, id);
    auto r2 = std::from_chars(part.data() + colon + 1, part.data() + part.size(), e);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} ||
        r2.ptr != part.data() + part.size() || e <= 0) {
      throw std::invalid_argument("MultiIndex key: malformed entry '" + std::string(part) + "'");
    }
    entries.emplace_back(id, e);
    if (semi == std::string_view::npos) break;
    key.remove_prefix(semi + 1);
  }
  MultiIndex out(time, entries);
  if (out.spatial_.size() != entries.size()) {
    throw std::invalid_argument("MultiIndex key: duplicate coordinate");
  }
  return out;
}

std::string coordinate_name(int id) {
  if (id == 0) return "u0";
  const int k = (id + 1) / 2;
  return (id % 2 == 1 ? "u" : "v") + std::to_string(k);
}

std::string MultiIndex::to_string() const {
  std::string s;
  auto push = [&s](const std::string& name, int e) {
    if (!s.empty()) s += '*';
    s += name;
    if (e > 1) s += '^' + std::to_string(e);
  };
  if (time_ > 0) push("t", time_);
  for (const auto& [id, e] : spatial_) push(coordinate_name(id), e);
  return s.empty() ? "1" : s;
}

bool operator<(const MultiIndex& a, const MultiIndex& b) {
  const int da = a.degree();
  const int db = b.degree();
  if (da != db) return da < db;
  if (a.time_ != b.time_) return a.time_ > b.time_;
  auto ia = a.spatial_.begin();
  auto ib = b.spatial_.begin();
  while (ia != a.spatial_.end() && ib != b.spatial_.end()) {
    if (ia->first != ib->first) return ia->first < ib->first;
    if (ia->second != ib->second) return ia->second > ib->second;
    ++ia;
    ++ib;
  }
  // Equal degree and equal prefix: the remaining lists are both empty.
  return false;
}

std::size_t MultiIndexHash::operator()(const MultiIndex& a) const noexcept {
  std::size_t h = std::hash<int>{}(a.time()) * 0x9E3779B97F4A7C15ull;
  for (const auto& [id, e] : a.spatial()) {
    h ^= (static_cast<std::size_t>(id) << 8 | static_cast<std::size_t>(e)) +
         0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  }
  return h;
}

Polynomial Polynomial::constant(double c) { return monomial(MultiIndex{}, c); }

Polynomial Polynomial::monomial(const MultiIndex& a, double c) {
  Polynomial p;
  p.add_term(a, c);
  return p;
}

double Polynomial::coefficient(const MultiIndex& a) const {
  auto it = terms_.find(a);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const MultiIndex& a, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(a, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [a, c] : terms_) d = std::max(d, a.degree());
  return d;
}

int Polynomial::harmonic_degree() const {
  int h = 0;
  for (const auto& [a, c] : terms_) h = std::max(h, a.harmonic_degree());
  return h;
}

double Polynomial::evaluate(double t, std::span<const double> x) const {
  double v = 0.0;
  for (const auto& [a, c] : terms_) v += c * a.evaluate(t, x);
  return v;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  for (const auto& [a, c] : other.terms_) add_term(a, c);
  return *this;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial out = *this;
  out += other;
  return out;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  Polynomial out;
  for (const auto& [a, ca] : terms_) {
    for (const auto& [b, cb] : other.terms_) out.add_term(a * b, ca * cb);
  }
  return out;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial out;
  if (s == 0.0) return out;
  for (const auto& [a, c] : terms_) out.add_term(a, c * s);
  return out;
}

}  // namespace rdsos
