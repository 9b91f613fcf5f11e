#ifndef HAFEM_MARKING_HPP
#define HAFEM_MARKING_HPP

#include <span>
#include <vector>

#include "hafem/estimator.hpp"

namespace hafem {

/// Minimal bulk set: the shortest prefix of the indicators sorted by
/// decreasing value (ties by increasing id) whose squares sum to at least
/// theta^2 times the total. Returned in that order. Empty when every
/// indicator vanishes.
std::vector<Index> dorfler_mark(std::span<const double> indicators, double theta);
std::vector<Index> dorfler_mark(const ErrorIndicators& indicators, double theta);

}  // namespace hafem

#endif  // HAFEM_MARKING_HPP
