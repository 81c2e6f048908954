#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "rdsos/moment_io.hpp"
#include "rdsos/relaxation.hpp"

namespace rdsos {

namespace {

using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>;

void finalize(SdpaProblem& s, const std::map<Key, double>& acc) {
  s.entries.clear();
  for (const auto& [k, v] : acc) {
    if (v == 0.0) continue;
    s.entries.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k), v});
  }
}

}  // namespace

SdpaProblem to_sdpa(const ConicProblem& p) {
  SdpaProblem s;
  const std::size_t n = p.num_moments();
  const std::size_t tau = p.num_vars() + 1;  // 1-based matrix index of tau
  s.num_vars = p.num_vars() + 1;
  s.c.assign(s.num_vars, 0.0);
  s.c[s.num_vars - 1] = 1.0;

  std::ostringstream head;
  head << "rdsos relaxation order=" << p.options.order << " harmonic=" << p.options.harmonic
       << " cutoff=" << p.options.cutoff << " eps=" << format_double(p.options.eps)
       << " radius_squared=" << format_double(p.radius_squared);
  s.comments.push_back(head.str());
  s.comments.push_back("variables: occupation 1.." + std::to_string(p.occ_vars.size()) + ", terminal " +
                       std::to_string(p.term_offset() + 1) + ".." + std::to_string(n) + ", slack " +
                       std::to_string(n + 1) + ".." + std::to_string(p.num_vars()) + ", tau " +
                       std::to_string(tau));

  std::map<Key, double> acc;
  // Block 1: each equality as a pair of opposite inequalities.
  const std::size_t neq = p.equalities.size();
  s.block_struct.push_back(-static_cast<long>(2 * neq));
  s.comments.push_back("block 1: equalities (" + std::to_string(neq) + " pairs)");
  for (std::size_t r = 0; r < neq; ++r) {
    const auto& row = p.equalities[r];
    const std::size_t d1 = 2 * r + 1, d2 = 2 * r + 2;
    for (const auto& [v, c] : row.coeffs) {
      acc[{v + 1, 1, d1, d1}] += c;
      acc[{v + 1, 1, d2, d2}] -= c;
    }
    acc[{0, 1, d1, d1}] += row.rhs;
    acc[{0, 1, d2, d2}] -= row.rhs;
  }
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    const auto& b = p.blocks[k];
    const std::size_t id = k + 2;
    s.block_struct.push_back(static_cast<long>(b.dim));
    s.comments.push_back("block " + std::to_string(id) + ": " + b.name);
    for (const auto& e : b.entries) acc[{e.var + 1, id, e.row + 1u, e.col + 1u}] += e.coef;
  }
  // Epigraph of the quadratic objective.
  const bool ridge = p.options.ridge > 0.0;
  const std::size_t arrow = 1 + p.num_slack + (ridge ? n : 0);
  const std::size_t id = p.blocks.size() + 2;
  s.block_struct.push_back(static_cast<long>(arrow));
  s.comments.push_back("block " + std::to_string(id) + ": objective epigraph");
  acc[{tau, id, 1, 1}] += 1.0;
  const double sl = std::sqrt(p.options.objective_scale);
  for (std::size_t r = 0; r < p.num_slack; ++r) acc[{p.slack_offset() + r + 1, id, 1, r + 2}] += sl;
  if (ridge) {
    const double sr = std::sqrt(p.options.ridge);
    for (std::size_t v = 0; v < n; ++v) acc[{v + 1, id, 1, p.num_slack + v + 2}] += sr;
  }
  for (std::size_t d = 2; d <= arrow; ++d) acc[{0, id, d, d}] -= 1.0;
  finalize(s, acc);
  return s;
}

void write_sdpa(const SdpaProblem& p, std::ostream& os) {
  for (const auto& c : p.comments) os << "* " << c << '\n';
  os << p.num_vars << '\n' << p.block_struct.size() << '\n';
  for (std::size_t i = 0; i < p.block_struct.size(); ++i) os << (i ? " " : "") << p.block_struct[i];
  os << '\n';
  for (std::size_t i = 0; i < p.c.size(); ++i) os << (i ? " " : "") << format_double(p.c[i]);
  os << '\n';
  for (const auto& e : p.entries) {
    os << e.mat << ' ' << e.block << ' ' << e.i << ' ' << e.j << ' ' << format_double(e.value) << '\n';
  }
}

SdpaProblem read_sdpa(std::istream& is) {
  SdpaProblem p;
  std::string line;
  std::ostringstream body;
  while (std::getline(is, line)) {
    if (!line.empty() && (line[0] == '*' || line[0] == '"')) {
      if (line[0] == '*') {
        std::string c = line.substr(1);
        if (!c.empty() && c[0] == ' ') c.erase(0, 1);
        p.comments.push_back(std::move(c));
      }
      continue;
    }
    for (char& ch : line) {
      if (ch == ',' || ch == '(' || ch == ')' || ch == '{' || ch == '}') ch = ' ';
    }
    body << line << '\n';
  }
  std::istringstream in(body.str());
  long nblocks = 0;
  if (!(in >> p.num_vars >> nblocks) || nblocks <= 0) throw std::invalid_argument("SDPA: bad header");
  for (long b = 0; b < nblocks; ++b) {
    long d = 0;
    if (!(in >> d) || d == 0) throw std::invalid_argument("SDPA: bad block structure");
    p.block_struct.push_back(d);
  }
  p.c.resize(p.num_vars);
  for (auto& v : p.c) {
    if (!(in >> v)) throw std::invalid_argument("SDPA: truncated objective vector");
  }
  std::map<Key, double> acc;
  std::size_t m = 0, b = 0, i = 0, j = 0;
  double v = 0.0;
  while (in >> m >> b >> i >> j >> v) {
    if (m > p.num_vars || b < 1 || b > p.block_struct.size()) throw std::invalid_argument("SDPA: entry out of range");
    if (i > j) std::swap(i, j);
    const auto dim = static_cast<std::size_t>(std::abs(p.block_struct[b - 1]));
    if (i < 1 || j > dim || (p.block_struct[b - 1] < 0 && i != j)) {
      throw std::invalid_argument("SDPA: entry outside its block");
    }
    acc[{m, b, i, j}] += v;
  }
  if (!in.eof()) throw std::invalid_argument("SDPA: malformed entry line");
  finalize(p, acc);
  return p;
}

std::vector<Eigen::MatrixXd> SdpaProblem::evaluate(const Eigen::VectorXd& y) const {
  if (y.size() != static_cast<Eigen::Index>(num_vars)) throw std::invalid_argument("SDPA evaluate: wrong length");
  std::vector<Eigen::MatrixXd> out;
  for (long d : block_struct) {
    const auto n = static_cast<Eigen::Index>(std::abs(d));
    // Diagonal blocks are returned as a single column.
    out.push_back(d < 0 ? Eigen::MatrixXd::Zero(n, 1) : Eigen::MatrixXd::Zero(n, n));
  }
  for (const auto& e : entries) {
    const double scale = e.mat == 0 ? -1.0 : y[static_cast<Eigen::Index>(e.mat - 1)];
    auto& m = out[e.block - 1];
    const auto i = static_cast<Eigen::Index>(e.i - 1), j = static_cast<Eigen::Index>(e.j - 1);
    if (block_struct[e.block - 1] < 0) {
      m(i, 0) += scale * e.value;
    } else {
      m(i, j) += scale * e.value;
      if (i != j) m(j, i) += scale * e.value;
    }
  }
  return out;
}

void export_sdpa(const ConicProblem& p, const std::string& path) {
  std::ostringstream os;
  write_sdpa(to_sdpa(p), os);
  write_file_atomic(path, os.str());
}

Eigen::VectorXd sdpa_point(const ConicProblem& p, const Eigen::VectorXd& x) {
  if (x.size() != static_cast<Eigen::Index>(p.num_vars())) throw std::invalid_argument("sdpa_point: wrong length");
  Eigen::VectorXd y(x.size() + 1);
  y.head(x.size()) = x;
  const auto n = static_cast<Eigen::Index>(p.num_moments());
  y[x.size()] = p.options.objective_scale * x.tail(x.size() - n).squaredNorm() +
                p.options.ridge * x.head(n).squaredNorm();
  return y;
}

}  // namespace rdsos
