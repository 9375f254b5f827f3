// SPDX-License-Identifier: Apache-2.0
// Shared helpers for the test binaries: random inputs and independent oracles.
#pragma once

#include <random>
#include <vector>

#include "imtk/bundle.hpp"
#include "imtk/expr.hpp"

namespace testing {

/// Random pole-free expression of depth <= max_depth in `dim` coordinates.
imtk::Expr random_expr(std::mt19937_64& rng, int max_depth, int dim);

/// Central difference of e in coordinate i.
double central_difference(const imtk::Expr& e, std::vector<double> p, int i, double h);

/// Uniform point in [-1, 1]^dim.
std::vector<double> random_point(std::mt19937_64& rng, int dim, double lo = -1.0, double hi = 1.0);

/// Parses each entry of a matrix given row by row.
imtk::ExprMatrix matrix(int rows, int cols, const std::vector<const char*>& entries, int dim);

}  // namespace testing
