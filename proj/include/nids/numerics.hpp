#pragma once

#include <functional>
#include <span>
#include <vector>

namespace nids {

// Linear-interpolation percentile: rank r = p*(n-1) on the sorted values,
// interpolated between the floor and ceil ranks. p in [0, 1].
double percentile(std::span<const double> values, double p);

// Central-difference gradient of f at x, step h per coordinate.
// Oracle for every hand-written backward pass; lives here so test code and
// attack verification share one implementation.
std::vector<double> finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                                         std::span<const double> x, double h = 1e-5);

} // namespace nids
