// SPDX-License-Identifier: Apache-2.0
#include "imtk/chart.hpp"

#include <cmath>
#include <stdexcept>

namespace imtk {

Chart::Chart(int n, bool exclude_origin)
    : dim(n), bounds(static_cast<std::size_t>(n), {-1.0, 1.0}), excluded_origin(exclude_origin) {}

Chart::Chart(int n, std::vector<std::pair<double, double>> b, bool exclude_origin)
    : dim(n), bounds(std::move(b)), excluded_origin(exclude_origin) {
  if (static_cast<int>(bounds.size()) != n)
    throw std::invalid_argument("chart: bounds do not match dimension");
  for (auto [lo, hi] : bounds)
    if (!(lo < hi)) throw std::invalid_argument("chart: empty coordinate interval");
}

bool Chart::contains(std::span<const double> p, double margin) const {
  if (static_cast<int>(p.size()) != dim) return false;
  double r2 = 0.0;
  for (int i = 0; i < dim; ++i) {
    auto [lo, hi] = bounds[static_cast<std::size_t>(i)];
    if (p[static_cast<std::size_t>(i)] < lo - margin || p[static_cast<std::size_t>(i)] > hi + margin)
      return false;
    r2 += p[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(i)];
  }
  return !excluded_origin || std::sqrt(r2) >= kOriginRadius - margin;
}

Point Chart::sample(std::mt19937_64& rng) const {
  Point p(static_cast<std::size_t>(dim));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (int i = 0; i < dim; ++i) {
      auto [lo, hi] = bounds[static_cast<std::size_t>(i)];
      std::uniform_real_distribution<double> u(lo, hi);
      p[static_cast<std::size_t>(i)] = u(rng);
    }
    if (contains(p)) return p;
  }
  throw std::runtime_error("chart: could not sample an admissible point");
}

bool operator==(const Chart& a, const Chart& b) {
  return a.dim == b.dim && a.bounds == b.bounds && a.excluded_origin == b.excluded_origin;
}

int for_each_sample(const Chart& chart, const SamplePlan& plan,
                    const std::function<void(const Point&)>& fn) {
  std::mt19937_64 rng(plan.seed);
  int accepted = 0;
  int discarded = 0;
  const int limit = 20 * std::max(plan.count, 1);
  while (accepted < plan.count) {
    if (accepted + discarded >= limit)
      throw std::runtime_error("sampling: too many points hit a pole (" +
                               std::to_string(discarded) + " discarded)");
    Point p = chart.sample(rng);
    try {
      fn(p);
      ++accepted;
    } catch (const EvalError&) {
      ++discarded;
    }
  }
  return discarded;
}

double sampled_max_abs(const Chart& chart, std::span<const Expr> exprs, const SamplePlan& plan,
                       int* discarded) {
  std::vector<Expr> live;
  for (const Expr& e : exprs)
    if (!e.is_zero()) live.push_back(e);
  if (live.empty()) return 0.0;
  ExprProgram prog(live);
  std::vector<double> out(live.size());
  double worst = 0.0;
  int d = for_each_sample(chart, plan, [&](const Point& p) {
    prog.evaluate(p, out);
    for (double v : out) worst = std::max(worst, std::isfinite(v) ? std::abs(v) : INFINITY);
  });
  if (discarded) *discarded += d;
  return worst;
}

double max_difference(const Chart& chart, const Expr& a, const Expr& b, int points,
                      std::uint64_t seed) {
  std::vector<Expr> both{a, b};
  ExprProgram prog(both);
  double worst = 0.0;
  for_each_sample(chart, SamplePlan{seed, points}, [&](const Point& p) {
    auto v = prog.evaluate(p);
    worst = std::max(worst, std::abs(v[0] - v[1]));
  });
  return worst;
}

bool equal_by_sampling(const Chart& chart, const Expr& a, const Expr& b, double tol) {
  return max_difference(chart, a, b, 32) < tol;
}

}  // namespace imtk
