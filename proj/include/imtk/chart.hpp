// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "imtk/expr.hpp"

namespace imtk {

using Point = std::vector<double>;

/// Coordinate box in R^n, optionally with a small ball around 0 removed.
struct Chart {
  int dim = 0;
  std::vector<std::pair<double, double>> bounds;  ///< per coordinate, default [-1, 1]
  bool excluded_origin = false;

  static constexpr double kOriginRadius = 0.1;

  Chart() = default;
  explicit Chart(int n, bool exclude_origin = false);
  Chart(int n, std::vector<std::pair<double, double>> b, bool exclude_origin = false);

  bool contains(std::span<const double> p, double margin = 0.0) const;
  Point sample(std::mt19937_64& rng) const;
};

bool operator==(const Chart& a, const Chart& b);

/// Seeded sampling schedule shared by every checker.
struct SamplePlan {
  std::uint64_t seed = 42;
  int count = 200;
};

/// Samples points; a point where `fn` hits an EvalError is replaced by a fresh draw.
///
/// Returns the number of discarded draws. Throws if fewer than `plan.count`
/// admissible points were found after 20 * count attempts.
int for_each_sample(const Chart& chart, const SamplePlan& plan,
                    const std::function<void(const Point&)>& fn);

/// Largest |value| of any expression over the planned samples.
///
/// `discarded` (optional) accumulates draws rejected at poles.
double sampled_max_abs(const Chart& chart, std::span<const Expr> exprs, const SamplePlan& plan,
                       int* discarded = nullptr);

/// max over points of |a - b|
double max_difference(const Chart& chart, const Expr& a, const Expr& b, int points = 32,
                      std::uint64_t seed = 7);

/// Equality decided by evaluation on 32 random points at tolerance 1e-10.
bool equal_by_sampling(const Chart& chart, const Expr& a, const Expr& b, double tol = 1e-10);

}  // namespace imtk
