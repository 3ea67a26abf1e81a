#pragma once

#include <span>
#include <vector>

namespace bnls {

/// Finite-difference weights for derivatives 0..max_order at point `z`
/// from the sample abscissae `x` (Fornberg's recursion).
///
/// Returns a (max_order+1) x x.size() table, row k holding the weights of
/// the k-th derivative.
std::vector<std::vector<double>> fd_weights(double z, std::span<const double> x, int max_order);

/// Centered weights on a unit-spaced stencil of half-width `half_width`
/// for derivative `order`. Scale by h^-order before use.
std::vector<double> centered_weights(int half_width, int order);

}  // namespace bnls
