#include "hafem/marking.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace hafem {

std::vector<Index> dorfler_mark(std::span<const double> eta, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("dorfler_mark: theta must lie in (0, 1]");
  std::vector<Index> order(eta.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return eta[a] > eta[b]; });

  // Sum in the sorted order so the full prefix reproduces the total exactly.
  double total = 0.0;
  for (Index t : order) {
    if (eta[t] < 0.0) throw std::invalid_argument("dorfler_mark: negative indicator");
    total += eta[t] * eta[t];
  }
  std::vector<Index> marked;
  if (total == 0.0) return marked;
  const double goal = theta * theta * total;
  double sum = 0.0;
  for (Index t : order) {
    marked.push_back(t);
    sum += eta[t] * eta[t];
    if (sum >= goal) break;
  }
  return marked;
}

std::vector<Index> dorfler_mark(const ErrorIndicators& indicators, double theta) {
  return dorfler_mark(std::span<const double>(indicators.per_element), theta);
}

}  // namespace hafem
