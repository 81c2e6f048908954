#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdsos/relaxation.hpp"

namespace rdsos {

MatchStats compare_moments(const MomentSequence& computed, const MomentSequence& reference,
                           double rel_tol, double floor, std::size_t keep_worst) {
  if (!(rel_tol > 0.0) || !(floor > 0.0)) throw std::invalid_argument("compare_moments: tolerances must be > 0");
  MatchStats st;
  st.rel_tol = rel_tol;
  st.floor = floor;
  std::vector<MomentMismatch> all;
  for (const auto& [a, r] : reference.entries()) {
    auto it = computed.entries().find(a);
    if (it == computed.entries().end()) continue;
    const double c = it->second;
    const double err = std::abs(c - r) / std::max(std::abs(r), floor);
    ++st.shared;
    if (err <= rel_tol) ++st.matched;
    all.push_back({a, c, r, std::isnan(err) ? INFINITY : err});
  }
  if (st.shared == 0) throw std::invalid_argument("compare_moments: no shared indices");
  st.fraction = static_cast<double>(st.matched) / static_cast<double>(st.shared);
  const std::size_t k = std::min(keep_worst, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<long>(k), all.end(),
                    [](const auto& x, const auto& y) { return x.scaled_error > y.scaled_error; });
  all.resize(k);
  st.worst = std::move(all);
  return st;
}

nlohmann::json MatchStats::to_json() const {
  nlohmann::json w = nlohmann::json::array();
  for (const auto& m : worst) {
    w.push_back({{"index", m.index.to_string()},
                 {"computed", m.computed},
                 {"reference", m.reference},
                 {"scaled_error", m.scaled_error}});
  }
  return {{"shared", shared}, {"matched", matched}, {"fraction", fraction},
          {"rel_tol", rel_tol}, {"floor", floor}, {"worst", std::move(w)}};
}

}  // namespace rdsos
