// SPDX-License-Identifier: Apache-2.0
#include "imtk/groupoid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "imtk/coupling.hpp"

namespace imtk {

namespace {

constexpr int kMaxAttempts = 50;

Eigen::VectorXd unit(int n, int i) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e(i) = 1.0;
  return e;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m) {
  if (m.cols() == 0) return Eigen::MatrixXd(0, m.rows());
  return m.completeOrthogonalDecomposition().pseudoInverse();
}

Eigen::VectorXd ball_vector(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::VectorXd v(d);
  for (int a = 0; a < d; ++a) v(a) = gauss(rng);
  double nrm = v.norm();
  if (d == 0 || nrm == 0.0) return v;
  return v * (std::pow(uni(rng), 1.0 / d) / nrm);
}

Eigen::VectorXd gauss_vector(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> gauss;
  Eigen::VectorXd v(d);
  for (int a = 0; a < d; ++a) v(a) = gauss(rng);
  return v;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

// Runs fn on `count` draws; draws that hit a pole are retried.
template <class F>
int sampled(int count, std::mt19937_64& rng, F&& fn) {
  int discarded = 0;
  for (int done = 0, tries = 0; done < count; ++tries) {
    if (tries > kMaxAttempts * std::max(count, 1))
      throw std::runtime_error("groupoid: too many draws hit a pole");
    try {
      fn(rng);
      ++done;
    } catch (const EvalError&) {
      ++discarded;
    }
  }
  return discarded;
}

Report fresh(const std::string& command, std::uint64_t seed, int samples) {
  Report r;
  r.command = command;
  r.seed = seed;
  r.samples = samples;
  return r;
}

int ipow(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Dense component tensors on the basis (e_a, 0), (0, e_i).
using Tensor = std::vector<Eigen::VectorXd>;

std::vector<int> digits(int flat, int base, int len) {
  std::vector<int> out(static_cast<std::size_t>(len));
  for (int j = len - 1; j >= 0; --j) {
    out[static_cast<std::size_t>(j)] = flat % base;
    flat /= base;
  }
  return out;
}

int flatten(const std::vector<int>& idx, int base) {
  int f = 0;
  for (int i : idx) f = f * base + i;
  return f;
}

GTangent basis_tangent(int d, int n, int mu) {
  if (mu < d) return {unit(d, mu), Eigen::VectorXd::Zero(n)};
  return {Eigen::VectorXd::Zero(d), unit(n, mu - d)};
}

Eigen::VectorXd to_coords(const GTangent& t) {
  Eigen::VectorXd c(t.v.size() + t.w.size());
  c << t.v, t.w;
  return c;
}

// Sign of the permutation sorting idx, 0 if an index repeats.
int sort_sign(std::vector<int>& idx) {
  int s = 1;
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j + 1 < idx.size() - i; ++j) {
      if (idx[j] == idx[j + 1]) return 0;
      if (idx[j] > idx[j + 1]) {
        std::swap(idx[j], idx[j + 1]);
        s = -s;
      }
    }
  for (std::size_t j = 0; j + 1 < idx.size(); ++j)
    if (idx[j] == idx[j + 1]) return 0;
  return s;
}

Tensor components(const ActionGroupoid& gpd, const MultForm& w, const Arrow& p) {
  if (w.tensor()) return w.tensor()(p);
  const int d = gpd.group().dim(), n = gpd.dim(), dd = d + n, deg = w.degree();
  const int total = ipow(dd, deg);
  Tensor t(static_cast<std::size_t>(total), Eigen::VectorXd::Zero(w.k()));
  std::vector<bool> done(static_cast<std::size_t>(total), false);
  for (int f = 0; f < total; ++f) {
    std::vector<int> idx = digits(f, dd, deg);
    if (!std::is_sorted(idx.begin(), idx.end()) ||
        std::adjacent_find(idx.begin(), idx.end()) != idx.end())
      continue;
    std::vector<GTangent> tv;
    for (int mu : idx) tv.push_back(basis_tangent(d, n, mu));
    t[static_cast<std::size_t>(f)] = w(p, tv);
    done[static_cast<std::size_t>(f)] = true;
  }
  for (int f = 0; f < total; ++f) {
    if (done[static_cast<std::size_t>(f)]) continue;
    std::vector<int> idx = digits(f, dd, deg);
    int s = sort_sign(idx);
    if (s != 0) t[static_cast<std::size_t>(f)] = s * t[static_cast<std::size_t>(flatten(idx, dd))];
  }
  return t;
}

Eigen::VectorXd contract(const Tensor& t, int dd, int k, std::span<const GTangent> tv) {
  const int deg = static_cast<int>(tv.size());
  std::vector<Eigen::VectorXd> c;
  for (const GTangent& x : tv) c.push_back(to_coords(x));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(k);
  for (int f = 0; f < static_cast<int>(t.size()); ++f) {
    std::vector<int> idx = digits(f, dd, deg);
    double coeff = 1.0;
    for (int j = 0; j < deg && coeff != 0.0; ++j)
      coeff *= c[static_cast<std::size_t>(j)](idx[static_cast<std::size_t>(j)]);
    if (coeff != 0.0) out += coeff * t[static_cast<std::size_t>(f)];
  }
  return out;
}

// Components of t in the frame whose vectors are the columns of e.
Tensor change_basis(const Tensor& t, int dd, int deg, int k, const Eigen::MatrixXd& e) {
  Tensor out(t.size(), Eigen::VectorXd::Zero(k));
  for (int f = 0; f < static_cast<int>(t.size()); ++f) {
    std::vector<int> nu = digits(f, dd, deg);
    for (int g = 0; g < static_cast<int>(t.size()); ++g) {
      if (t[static_cast<std::size_t>(g)].size() == 0) continue;
      std::vector<int> mu = digits(g, dd, deg);
      double coeff = 1.0;
      for (int j = 0; j < deg && coeff != 0.0; ++j)
        coeff *= e(mu[static_cast<std::size_t>(j)], nu[static_cast<std::size_t>(j)]);
      if (coeff != 0.0) out[static_cast<std::size_t>(f)] += coeff * t[static_cast<std::size_t>(g)];
    }
  }
  return out;
}

double tensor_max(const Tensor& t) {
  double m = 0.0;
  for (const auto& v : t) m = std::max(m, max_abs(v));
  return m;
}

}  // namespace

// ---------------------------------------------------------------- MatrixGroup

MatrixGroup::MatrixGroup(int n, std::vector<Eigen::MatrixXd> generators) : n_(n), basis_(std::move(generators)) {
  const int d = dim();
  for (const auto& x : basis_)
    if (x.rows() != n || x.cols() != n) throw std::invalid_argument("MatrixGroup: basis matrix is not N x N");
  Eigen::MatrixXd b(n * n, d);
  for (int a = 0; a < d; ++a) b.col(a) = Eigen::Map<const Eigen::VectorXd>(basis_[static_cast<std::size_t>(a)].data(), n * n);
  if (d > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
    if (svd.singularValues().minCoeff() < 1e-10 * std::max(1.0, svd.singularValues().maxCoeff()))
      throw std::invalid_argument("MatrixGroup: basis is linearly dependent");
  }
  gram_ = b.transpose() * b;
  c_.assign(static_cast<std::size_t>(d * d * d), 0.0);
  for (int a = 0; a < d; ++a)
    for (int bb = 0; bb < d; ++bb) {
      double res = 0.0;
      Eigen::VectorXd c = vee(basis(a) * basis(bb) - basis(bb) * basis(a), &res);
      closure_ = std::max(closure_, res);
      for (int e = 0; e < d; ++e) c_[static_cast<std::size_t>((a * d + bb) * d + e)] = c(e);
    }
  if (closure_ > 1e-10) throw std::invalid_argument("MatrixGroup: basis does not close under commutators");
}

Eigen::MatrixXd MatrixGroup::hat(const Eigen::VectorXd& v) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (int a = 0; a < dim(); ++a) m += v(a) * basis(a);
  return m;
}

Eigen::VectorXd MatrixGroup::vee(const Eigen::MatrixXd& m, double* residual) const {
  const int d = dim();
  Eigen::VectorXd rhs(d);
  for (int a = 0; a < d; ++a) rhs(a) = (basis(a).array() * m.array()).sum();
  Eigen::VectorXd c = d ? Eigen::VectorXd(gram_.ldlt().solve(rhs)) : Eigen::VectorXd(0);
  if (residual) *residual = (m - hat(c)).cwiseAbs().maxCoeff();
  return c;
}

Eigen::MatrixXd MatrixGroup::adjoint(const Eigen::MatrixXd& g) const {
  const int d = dim();
  Eigen::MatrixXd gi = g.inverse();
  Eigen::MatrixXd ad(d, d);
  for (int a = 0; a < d; ++a) ad.col(a) = vee(g * basis(a) * gi);
  return ad;
}

double MatrixGroup::structure(int a, int b, int c) const {
  const int d = dim();
  return c_[static_cast<std::size_t>((a * d + b) * d + c)];
}

FiberBracket MatrixGroup::bracket() const {
  const int d = dim();
  FiberBracket br(d);
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      for (int c = 0; c < d; ++c)
        if (std::abs(structure(a, b, c)) > 1e-14) br.set(a, b, c, Expr(structure(a, b, c)));
  return br;
}

Eigen::MatrixXd MatrixGroup::expm(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (n == 0) return m;
  double nrm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int s = nrm > 0.5 ? static_cast<int>(std::ceil(std::log2(nrm / 0.5))) : 0;
  Eigen::MatrixXd a = m / std::ldexp(1.0, s);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = sum;
  for (int j = 1; j < 60; ++j) {
    term = term * a / j;
    sum += term;
    // run past the 1e-12 truncation level down to rounding
    if (term.cwiseAbs().maxCoeff() < 1e-12 * 1e-5) break;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

Eigen::MatrixXd MatrixGroup::dexp_left(const Eigen::MatrixXd& t, const Eigen::MatrixXd& y) {
  const Eigen::Index n = t.rows();
  Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  blk.topLeftCorner(n, n) = t;
  blk.topRightCorner(n, n) = y;
  blk.bottomRightCorner(n, n) = t;
  Eigen::MatrixXd e = expm(blk);
  return expm(-t) * e.topRightCorner(n, n);
}

MatrixGroup so2_group() {
  Eigen::MatrixXd j(2, 2);
  j << 0, -1, 1, 0;
  return MatrixGroup(2, {j});
}

MatrixGroup so3_group() {
  std::vector<Eigen::MatrixXd> b;
  for (int a = 0; a < 3; ++a) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d ea = Eigen::Vector3d::Unit(a), ej = Eigen::Vector3d::Unit(j);
      m.col(j) = ea.cross(ej);
    }
    b.push_back(m);
  }
  return MatrixGroup(3, b);
}

// ------------------------------------------------------------ ActionGroupoid

ActionGroupoid::ActionGroupoid(MatrixGroup group, Chart chart, std::vector<Expr> action, ExprMatrix kframe,
                               ExprMatrix adapted)
    : group_(std::move(group)), chart_(std::move(chart)), action_(std::move(action)),
      kframe_(std::move(kframe)), adapted_(std::move(adapted)) {
  const int n = chart_.dim, d = group_.dim(), big = group_.size();
  const int nv = n + big * big;
  if (static_cast<int>(action_.size()) != n)
    throw DimensionError("ActionGroupoid: action has " + std::to_string(action_.size()) +
                         " components, chart has dimension " + std::to_string(n));
  if (kframe_.rows != d) throw DimensionError("ActionGroupoid: ideal frame must have one row per Lie algebra basis element");
  if (adapted_.rows == 0) {
    if (kframe_.cols != d) throw std::invalid_argument("ActionGroupoid: an adapted frame is required when k < dim g");
    adapted_ = kframe_;
  }
  if (adapted_.rows != d || adapted_.cols != d) throw DimensionError("ActionGroupoid: adapted frame must be d x d");
  if (max_difference(chart_, adapted_.block(0, 0, d, kframe_.cols), kframe_) > 1e-12)
    throw std::invalid_argument("ActionGroupoid: adapted frame does not start with the ideal frame");

  act_prog_ = ExprProgram(action_);
  std::vector<Expr> jac;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < nv; ++j) jac.push_back(differentiate(action_[static_cast<std::size_t>(i)], j));
  jac_prog_ = ExprProgram(jac);
  k_prog_ = ExprProgram(kframe_.data);

  // rho(X_a)^i = -sum_pq d action^i / d g_pq (I, x) (X_a)_pq
  std::vector<Expr> at_unit;
  for (int j = 0; j < n; ++j) at_unit.push_back(Expr::coordinate(j));
  for (int p = 0; p < big; ++p)
    for (int q = 0; q < big; ++q) at_unit.push_back(Expr(p == q ? 1.0 : 0.0));
  anchor_ = ExprMatrix(n, d);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) {
      Expr sum(0.0);
      for (int p = 0; p < big; ++p)
        for (int q = 0; q < big; ++q) {
          double x = group_.basis(a)(p, q);
          if (x == 0.0) continue;
          Expr part = substitute(jac[static_cast<std::size_t>(i * nv + n + p * big + q)], at_unit);
          sum = sum - Expr(x) * part;
        }
      anchor_(i, a) = sum;
    }
}

Point ActionGroupoid::act(const Eigen::MatrixXd& g, std::span<const double> x) const {
  const int n = dim(), big = group_.size();
  std::vector<double> in(x.begin(), x.end());
  in.resize(static_cast<std::size_t>(n + big * big));
  for (int p = 0; p < big; ++p)
    for (int q = 0; q < big; ++q) in[static_cast<std::size_t>(n + p * big + q)] = g(p, q);
  return act_prog_.evaluate(in);
}

Eigen::MatrixXd ActionGroupoid::act_jacobian(const Eigen::MatrixXd& g, std::span<const double> x) const {
  const int n = dim(), big = group_.size(), nv = n + big * big;
  std::vector<double> in(x.begin(), x.end());
  in.resize(static_cast<std::size_t>(nv));
  for (int p = 0; p < big; ++p)
    for (int q = 0; q < big; ++q) in[static_cast<std::size_t>(n + p * big + q)] = g(p, q);
  std::vector<double> j = jac_prog_.evaluate(in);
  Eigen::MatrixXd out(n, nv);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < nv; ++c) out(i, c) = j[static_cast<std::size_t>(i * nv + c)];
  return out;
}

Eigen::VectorXd ActionGroupoid::act_derivative(const Eigen::MatrixXd& g, std::span<const double> x,
                                               const Eigen::VectorXd& v, const Eigen::VectorXd& w) const {
  const int n = dim(), big = group_.size();
  Eigen::MatrixXd j = act_jacobian(g, x);
  Eigen::MatrixXd xi = g * group_.hat(v);
  Eigen::VectorXd out = j.leftCols(n) * w;
  for (int p = 0; p < big; ++p)
    for (int q = 0; q < big; ++q) out += j.col(n + p * big + q) * xi(p, q);
  return out;
}

Eigen::MatrixXd ActionGroupoid::ideal_basis(std::span<const double> x) const {
  const int d = group_.dim(), k = kframe_.cols;
  std::vector<double> v = k_prog_.evaluate(x);
  Eigen::MatrixXd m(d, k);
  for (int a = 0; a < d; ++a)
    for (int c = 0; c < k; ++c) m(a, c) = v[static_cast<std::size_t>(a * k + c)];
  return m;
}

Eigen::MatrixXd ActionGroupoid::transport(const Eigen::MatrixXd& g, std::span<const double> x) const {
  Point y = act(g, x);
  return pinv(ideal_basis(y)) * group_.adjoint(g) * ideal_basis(x);
}

Eigen::VectorXd ActionGroupoid::bracket(std::span<const double> x, const Eigen::VectorXd& u,
                                        const Eigen::VectorXd& v) const {
  const int d = group_.dim();
  Eigen::MatrixXd kx = ideal_basis(x);
  Eigen::VectorXd a = kx * u, b = kx * v, c = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (a(i) != 0.0 && b(j) != 0.0)
        for (int e = 0; e < d; ++e) c(e) += a(i) * b(j) * group_.structure(i, j, e);
  return pinv(kx) * c;
}

LieAlgebroid ActionGroupoid::algebroid() const {
  const int d = group_.dim();
  LieAlgebroid a(chart_, d, anchor_);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      for (int e = 0; e < d; ++e)
        if (std::abs(group_.structure(i, j, e)) > 1e-14) a.set_structure(i, j, e, Expr(group_.structure(i, j, e)));
  return a;
}

LieAlgebroid ActionGroupoid::adapted_algebroid() const {
  return algebroid().change_frame(adapted_, inverse(adapted_));
}

Arrow ActionGroupoid::random_arrow(std::mt19937_64& rng) const {
  Eigen::MatrixXd g = group_.exp(ball_vector(rng, group_.dim()));
  return {g, chart_.sample(rng)};
}

ComposablePair ActionGroupoid::random_pair(std::mt19937_64& rng) const {
  Eigen::MatrixXd g1 = group_.exp(ball_vector(rng, group_.dim()));
  Eigen::MatrixXd g2 = group_.exp(ball_vector(rng, group_.dim()));
  return {g1, g2, chart_.sample(rng)};
}

GTangent ActionGroupoid::random_tangent(std::mt19937_64& rng) const {
  return {gauss_vector(rng, group_.dim()), gauss_vector(rng, dim())};
}

Report ActionGroupoid::check(const SamplePlan& plan) const {
  Report r = fresh("groupoid-check", plan.seed, plan.count);
  const int n = dim(), big = group_.size();
  std::mt19937_64 rng(plan.seed);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(big, big);
  ExprProgram anchor_prog(anchor_.data);

  double unit_res = 0.0, comp = 0.0, kernel = 0.0, inv = 0.0;
  const int pairs = std::max(1, plan.count / 2);
  r.discarded += sampled(plan.count, rng, [&](std::mt19937_64& g) {
    Point x = chart_.sample(g);
    Point y = act(id, x);
    for (int i = 0; i < n; ++i) unit_res = std::max(unit_res, std::abs(y[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]));
    std::vector<double> rv = anchor_prog.evaluate(x);
    Eigen::MatrixXd rho = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        rv.data(), n, group_.dim());
    Eigen::MatrixXd kx = ideal_basis(x);
    if (kx.size()) kernel = std::max(kernel, (rho * kx).cwiseAbs().maxCoeff());
  });
  r.discarded += sampled(pairs, rng, [&](std::mt19937_64& g) {
    ComposablePair p = random_pair(g);
    Point a = act(p.g1, act(p.g2, p.x));
    Point b = act(p.g1 * p.g2, p.x);
    for (int i = 0; i < n; ++i) comp = std::max(comp, std::abs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]));
    Eigen::MatrixXd kx = ideal_basis(p.x);
    if (kx.cols() == 0) return;
    Eigen::MatrixXd q1 = (group_.adjoint(p.g2) * kx).householderQr().householderQ() *
                         Eigen::MatrixXd::Identity(group_.dim(), kx.cols());
    Eigen::MatrixXd q2 = ideal_basis(act(p.g2, p.x)).householderQr().householderQ() *
                         Eigen::MatrixXd::Identity(group_.dim(), kx.cols());
    Eigen::MatrixXd diff = q1 * q1.transpose() - q2 * q2.transpose();
    inv = std::max(inv, diff.jacobiSvd().singularValues()(0));
  });
  r.add("unit", unit_res, 1e-12);
  r.add("composition", comp, 1e-8);
  r.add("ideal_in_kernel", kernel, 1e-10);
  r.add("ideal_invariance", inv, 1e-7, "subspace distance between Ad_g k_x and k_gx");
  return r;
}

// ------------------------------------------------------------------ MultForm

Eigen::VectorXd MultForm::operator()(const Arrow& p, std::span<const GTangent> t) const {
  if (static_cast<int>(t.size()) != degree_)
    throw DimensionError("MultForm: expected " + std::to_string(degree_) + " tangent vectors, got " +
                         std::to_string(t.size()));
  return fn_(p, t);
}

MultForm operator+(const MultForm& a, const MultForm& b) {
  if (a.degree() != b.degree() || a.k() != b.k()) throw DimensionError("MultForm: sum of mismatched forms");
  return MultForm(a.degree(), a.k(), [a, b](const Arrow& p, std::span<const GTangent> t) {
    return Eigen::VectorXd(a(p, t) + b(p, t));
  });
}

Report check_multform(const ActionGroupoid& gpd, const MultForm& w, const SamplePlan& plan) {
  const int points = std::max(1, plan.count / 10);
  Report r = fresh("multform", plan.seed, points);
  std::mt19937_64 rng(plan.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double lin = 0.0, anti = 0.0;
  r.discarded = sampled(points, rng, [&](std::mt19937_64& g) {
    Arrow p = gpd.random_arrow(g);
    std::vector<GTangent> t;
    for (int j = 0; j < w.degree(); ++j) t.push_back(gpd.random_tangent(g));
    if (w.degree() == 0) return;
    GTangent extra = gpd.random_tangent(g);
    double a = uni(g), b = uni(g);
    Eigen::VectorXd base = w(p, t);
    std::vector<GTangent> t2 = t, t3 = t;
    t2[0] = extra;
    t3[0] = {a * t[0].v + b * extra.v, a * t[0].w + b * extra.w};
    Eigen::VectorXd lhs = w(p, t3), rhs = a * base + b * w(p, t2);
    double scale = std::max({1.0, max_abs(lhs), max_abs(rhs)});
    lin = std::max(lin, max_abs(lhs - rhs) / scale);
    for (int j = 0; j + 1 < w.degree(); ++j) {
      std::vector<GTangent> s = t;
      std::swap(s[static_cast<std::size_t>(j)], s[static_cast<std::size_t>(j + 1)]);
      anti = std::max(anti, max_abs(w(p, s) + base) / std::max(1.0, max_abs(base)));
    }
  });
  r.add("multilinear", lin, 1e-9);
  r.add("antisymmetric", anti, 1e-9);
  return r;
}

// -------------------------------------------------------- connection forms

Report splitting_preconditions(const ActionGroupoid& gpd, const ExprMatrix& l, const SamplePlan& plan) {
  const int d = gpd.group().dim(), k = gpd.k();
  if (l.rows != k || l.cols != d)
    throw DimensionError("connection_from_splitting: splitting must be k x d (" + std::to_string(k) + " x " +
                         std::to_string(d) + ")");
  Report r = fresh("splitting", plan.seed, plan.count);
  ExprProgram lp(l.data);
  auto eval_l = [&](std::span<const double> x) {
    std::vector<double> v = lp.evaluate(x);
    return Eigen::MatrixXd(Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), k, d));
  };
  std::mt19937_64 rng(plan.seed);
  double ident = 0.0, equi = 0.0;
  r.discarded = sampled(plan.count, rng, [&](std::mt19937_64& g) {
    Arrow p = gpd.random_arrow(g);
    Eigen::MatrixXd lx = eval_l(p.x);
    Eigen::MatrixXd e = lx * gpd.ideal_basis(p.x) - Eigen::MatrixXd::Identity(k, k);
    if (e.size()) ident = std::max(ident, e.cwiseAbs().maxCoeff());
    Eigen::MatrixXd q = eval_l(gpd.act(p.g, p.x)) * gpd.group().adjoint(p.g) - gpd.transport(p.g, p.x) * lx;
    if (q.size()) equi = std::max(equi, q.cwiseAbs().maxCoeff());
  });
  r.add("splitting_identity", ident, 1e-10);
  r.add("equivariance", equi, 1e-7);
  return r;
}

MultForm connection_from_splitting(const ActionGroupoid& gpd, const ExprMatrix& l, const SamplePlan& plan) {
  Report pre = splitting_preconditions(gpd, l, plan);
  if (!pre.pass()) throw PreconditionError("connection_from_splitting: not an equivariant splitting\n" + pre.summary(), pre);
  const int d = gpd.group().dim(), k = gpd.k();
  auto lp = std::make_shared<ExprProgram>(std::span<const Expr>(l.data));
  return MultForm(1, k, [lp, d, k](const Arrow& p, std::span<const GTangent> t) {
    std::vector<double> v = lp->evaluate(p.x);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> lx(v.data(), k, d);
    return Eigen::VectorXd(lx * t[0].v);
  });
}

LinearConnection splitting_connection(const ActionGroupoid& gpd, const ExprMatrix& l) {
  const int n = gpd.dim();
  std::vector<ExprMatrix> gamma;
  for (int i = 0; i < n; ++i) gamma.push_back(l * differentiate(gpd.kframe(), i));
  return LinearConnection(n, gpd.k(), gamma);
}

MultForm source_pullback(const ActionGroupoid& gpd, const CoeffForm& beta) {
  const int n = gpd.dim(), k = gpd.k();
  if (beta.degree() != 1 || beta.rank() != k || beta.dim() != n)
    throw DimensionError("source_pullback: expected a k-valued 1-form on M");
  auto prog = std::make_shared<ExprProgram>(std::span<const Expr>(beta.components()));
  return MultForm(1, k, [prog, n, k](const Arrow& p, std::span<const GTangent> t) {
    std::vector<double> v = prog->evaluate(p.x);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c) out(c) += v[static_cast<std::size_t>(i * k + c)] * t[0].w(i);
    return out;
  });
}

MultForm delta_function(const ActionGroupoid& gpd, std::function<Eigen::VectorXd(std::span<const double>)> f) {
  auto gp = std::make_shared<const ActionGroupoid>(gpd);
  return MultForm(0, gpd.k(), [gp, f](const Arrow& p, std::span<const GTangent>) {
    Point y = gp->act(p.g, p.x);
    return Eigen::VectorXd(gp->transport(p.g.inverse(), y) * f(y) - f(p.x));
  });
}

// ------------------------------------------------------------------- delta

ComposablePair compose(const ActionGroupoid& gpd, const Arrow& first, const Arrow& second) {
  Point t = gpd.act(second.g, second.x);
  double gap = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) gap = std::max(gap, std::abs(t[i] - first.x[i]));
  if (t.size() != first.x.size() || gap > 1e-10)
    throw std::invalid_argument("simplicial_delta: arrows are not composable");
  return {first.g, second.g, second.x};
}

Eigen::VectorXd simplicial_delta(const ActionGroupoid& gpd, const MultForm& w, const ComposablePair& pair,
                                 std::span<const PairTangent> t) {
  if (static_cast<int>(t.size()) != w.degree()) throw DimensionError("simplicial_delta: wrong number of tangents");
  const MatrixGroup& grp = gpd.group();
  Point y = gpd.act(pair.g2, pair.x);
  Arrow a1{pair.g1, y}, am{pair.g1 * pair.g2, pair.x}, a2{pair.g2, pair.x};
  Eigen::MatrixXd ad_inv = grp.adjoint(pair.g2.inverse());
  std::vector<GTangent> t1, tm, t2;
  for (const PairTangent& x : t) {
    t1.push_back({x.v1, gpd.act_derivative(pair.g2, pair.x, x.v2, x.w)});
    tm.push_back({ad_inv * x.v1 + x.v2, x.w});
    t2.push_back({x.v2, x.w});
  }
  return gpd.transport(pair.g2.inverse(), y) * w(a1, t1) - w(am, tm) + w(a2, t2);
}

double delta_residual(const ActionGroupoid& gpd, const MultForm& w, int pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  sampled(pairs, rng, [&](std::mt19937_64& g) {
    ComposablePair p = gpd.random_pair(g);
    std::vector<PairTangent> t;
    for (int j = 0; j < w.degree(); ++j)
      t.push_back({gauss_vector(g, gpd.group().dim()), gauss_vector(g, gpd.group().dim()), gauss_vector(g, gpd.dim())});
    worst = std::max(worst, max_abs(simplicial_delta(gpd, w, p, t)));
  });
  return worst;
}

// ------------------------------------------------------- covariant derivative

namespace {

// Chart (t, s) -> (g exp(t), x + s) around an arrow.
struct LocalChart {
  const ActionGroupoid* gpd;
  Arrow base;
  int d, n, dd;

  Arrow at(int mu, double e) const {
    Arrow p = base;
    if (mu < d) p.g = base.g * gpd->group().exp(e * unit(d, mu));
    else p.x[static_cast<std::size_t>(mu - d)] += e;
    return p;
  }
  // Columns: coordinate vectors at the displaced point, in the left-trivialized basis there.
  Eigen::MatrixXd frame(int mu, double e) const {
    Eigen::MatrixXd f = Eigen::MatrixXd::Identity(dd, dd);
    if (mu >= d) return f;
    const MatrixGroup& grp = gpd->group();
    Eigen::MatrixXd t = e * grp.basis(mu);
    for (int b = 0; b < d; ++b) f.block(0, b, d, 1) = grp.vee(MatrixGroup::dexp_left(t, grp.basis(b)));
    return f;
  }
};

// d^{nabla^s} w at an arrow, on the basis.
Tensor exterior_tensor(const ActionGroupoid& gpd, const MultForm& w, const LinearConnection& conn,
                       const Arrow& p, double h) {
  const int d = gpd.group().dim(), n = gpd.dim(), dd = d + n, k = w.k(), deg = w.degree();
  LocalChart ch{&gpd, p, d, n, dd};
  Tensor c0 = components(gpd, w, p);
  std::vector<Tensor> dc;
  for (int mu = 0; mu < dd; ++mu) {
    Tensor plus = change_basis(components(gpd, w, ch.at(mu, h)), dd, deg, k, ch.frame(mu, h));
    Tensor minus = change_basis(components(gpd, w, ch.at(mu, -h)), dd, deg, k, ch.frame(mu, -h));
    Tensor der(plus.size());
    for (std::size_t f = 0; f < plus.size(); ++f) der[f] = (plus[f] - minus[f]) / (2 * h);
    dc.push_back(std::move(der));
  }
  std::vector<Eigen::MatrixXd> gamma(static_cast<std::size_t>(dd), Eigen::MatrixXd::Zero(k, k));
  for (int i = 0; i < n; ++i) gamma[static_cast<std::size_t>(d + i)] = conn.christoffel(i).evaluate(p.x);

  const int total = ipow(dd, deg + 1);
  Tensor out(static_cast<std::size_t>(total), Eigen::VectorXd::Zero(k));
  for (int f = 0; f < total; ++f) {
    std::vector<int> idx = digits(f, dd, deg + 1);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
    for (int j = 0; j <= deg; ++j) {
      std::vector<int> rest = idx;
      rest.erase(rest.begin() + j);
      int mu = idx[static_cast<std::size_t>(j)];
      int g = flatten(rest, dd);
      Eigen::VectorXd term = dc[static_cast<std::size_t>(mu)][static_cast<std::size_t>(g)] +
                             gamma[static_cast<std::size_t>(mu)] * c0[static_cast<std::size_t>(g)];
      v += (j % 2 == 0 ? 1.0 : -1.0) * term;
    }
    out[static_cast<std::size_t>(f)] = v;
  }
  return out;
}

// h = 1 - (K alpha, 0) on the basis.
Eigen::MatrixXd horizontal_projection(const ActionGroupoid& gpd, const MultForm& alpha, const Arrow& p) {
  const int d = gpd.group().dim(), n = gpd.dim(), dd = d + n;
  Tensor a = components(gpd, alpha, p);
  Eigen::MatrixXd am(alpha.k(), dd);
  for (int mu = 0; mu < dd; ++mu) am.col(mu) = a[static_cast<std::size_t>(mu)];
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(dd, dd);
  h.topRows(d) -= gpd.ideal_basis(p.x) * am;
  return h;
}

MultForm tensor_form(const ActionGroupoid& gpd, int degree, int k, MultForm::TensorFn fn) {
  const int dd = gpd.group().dim() + gpd.dim();
  return MultForm(degree, k,
                  [fn, dd, k](const Arrow& p, std::span<const GTangent> t) { return contract(fn(p), dd, k, t); },
                  fn);
}

}  // namespace

MultForm covariant_exterior_d(const ActionGroupoid& gpd, const MultForm& w, const LinearConnection& conn,
                              FiniteDifference fd) {
  if (w.degree() < 1 || w.degree() > 2) throw DimensionError("covariant_exterior_d: degree must be 1 or 2");
  if (conn.rank() != w.k() || conn.dim() != gpd.dim()) throw DimensionError("covariant_exterior_d: connection does not match k");
  auto gp = std::make_shared<const ActionGroupoid>(gpd);
  return tensor_form(gpd, w.degree() + 1, w.k(), [gp, w, conn, fd](const Arrow& p) {
    return exterior_tensor(*gp, w, conn, p, fd.step);
  });
}

MultForm covariant_exterior_D(const ActionGroupoid& gpd, const MultForm& w, const MultForm& alpha,
                              const LinearConnection& conn, FiniteDifference fd) {
  if (alpha.degree() != 1 || alpha.k() != gpd.k()) throw DimensionError("covariant_exterior_D: alpha must be a k-valued 1-form");
  MultForm dw = covariant_exterior_d(gpd, w, conn, fd);
  auto gp = std::make_shared<const ActionGroupoid>(gpd);
  const int dd = gpd.group().dim() + gpd.dim();
  const int deg = dw.degree();
  return tensor_form(gpd, deg, w.k(), [gp, dw, alpha, dd, deg](const Arrow& p) {
    return change_basis(components(*gp, dw, p), dd, deg, dw.k(), horizontal_projection(*gp, alpha, p));
  });
}

namespace {

double structure_at(const ActionGroupoid& gpd, const MultForm& alpha, const Tensor& omega,
                    const LinearConnection& conn, const Arrow& p, double h) {
  const int dd = gpd.group().dim() + gpd.dim();
  Tensor da = exterior_tensor(gpd, alpha, conn, p, h);
  Tensor a = components(gpd, alpha, p);
  double worst = 0.0;
  double scale = std::max({1.0, tensor_max(omega), tensor_max(da)});
  for (int mu = 0; mu < dd; ++mu)
    for (int nu = 0; nu < dd; ++nu) {
      std::size_t f = static_cast<std::size_t>(mu * dd + nu);
      Eigen::VectorXd r = omega[f] - da[f] - gpd.bracket(p.x, a[static_cast<std::size_t>(mu)], a[static_cast<std::size_t>(nu)]);
      worst = std::max(worst, max_abs(r));
    }
  return worst / scale;
}

std::vector<Arrow> draw_arrows(const ActionGroupoid& gpd, int points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Arrow> out;
  for (int i = 0; i < points; ++i) out.push_back(gpd.random_arrow(rng));
  return out;
}

}  // namespace

double structure_residual(const ActionGroupoid& gpd, const MultForm& alpha, const MultForm& omega,
                          const LinearConnection& conn, int points, std::uint64_t seed, FiniteDifference fd) {
  double worst = 0.0;
  for (const Arrow& p : draw_arrows(gpd, points, seed))
    worst = std::max(worst, structure_at(gpd, alpha, components(gpd, omega, p), conn, p, fd.step));
  return worst;
}

Report check_groupoid_properties(const ActionGroupoid& gpd, const MultForm& alpha, const MultForm& omega,
                                 const LinearConnection& conn, const SamplePlan& plan, FiniteDifference fd) {
  if (omega.degree() != 2) throw DimensionError("check_groupoid_properties: Omega must be a 2-form");
  const int pairs = std::min(plan.count, 100);
  const int points = std::min(plan.count, 50);
  Report r = fresh("groupoid-verify", plan.seed, points);
  r.add("delta_alpha", delta_residual(gpd, alpha, pairs, plan.seed), 1e-7);

  double scale = 1.0, delta_omega = 0.0;
  {
    std::mt19937_64 rng(plan.seed + 1);
    std::vector<double> raw;
    r.discarded += sampled(points, rng, [&](std::mt19937_64& g) {
      ComposablePair p = gpd.random_pair(g);
      std::vector<PairTangent> t;
      for (int j = 0; j < 2; ++j)
        t.push_back({gauss_vector(g, gpd.group().dim()), gauss_vector(g, gpd.group().dim()), gauss_vector(g, gpd.dim())});
      Eigen::VectorXd od = simplicial_delta(gpd, omega, p, t);
      std::vector<GTangent> t2{{t[0].v2, t[0].w}, {t[1].v2, t[1].w}};
      scale = std::max(scale, max_abs(omega({p.g2, p.x}, t2)));
      delta_omega = std::max(delta_omega, max_abs(od));
    });
  }
  r.add("delta_Omega", delta_omega / scale, 1e-4, "relative");

  std::vector<Arrow> arrows = draw_arrows(gpd, points, plan.seed + 2);
  double st = 0.0, st_half = 0.0;
  for (const Arrow& p : arrows) {
    Tensor om = components(gpd, omega, p);
    st = std::max(st, structure_at(gpd, alpha, om, conn, p, fd.step));
  }
  MultForm omega_half = covariant_exterior_D(gpd, alpha, alpha, conn, FiniteDifference{fd.step / 2});
  for (std::size_t i = 0; i < arrows.size() && i < 10; ++i)
    st_half = std::max(st_half, structure_at(gpd, alpha, components(gpd, omega_half, arrows[i]), conn, arrows[i], fd.step / 2));
  r.add("structure", st, 1e-4, "relative");
  if (std::max(st, st_half) > 1e-10 && (st > 10 * st_half || st_half > 10 * st)) {
    std::ostringstream os;
    os << "step sensitivity: structure residual " << st << " at h versus " << st_half << " at h/2";
    r.notes.push_back(os.str());
  }

  MultForm d_omega = covariant_exterior_D(gpd, omega, alpha, conn, fd);
  const int bianchi_points = std::min(points, 10);
  double bianchi = 0.0, oscale = 1.0;
  for (int i = 0; i < bianchi_points; ++i) {
    const Arrow& p = arrows[static_cast<std::size_t>(i)];
    oscale = std::max(oscale, tensor_max(components(gpd, omega, p)));
    bianchi = std::max(bianchi, tensor_max(components(gpd, d_omega, p)));
  }
  r.add("bianchi", bianchi / oscale, 1e-4, "relative");
  return r;
}

Report step_halving(const ActionGroupoid& gpd, const MultForm& alpha, const LinearConnection& conn, double start,
                    double floor, int points, std::uint64_t seed) {
  Report r = fresh("step-halving", seed, points);
  double worst_ratio = INFINITY;
  double h = start;
  double prev = structure_residual(gpd, alpha, covariant_exterior_D(gpd, alpha, alpha, conn, {h}), conn, points, seed, {h});
  std::ostringstream os;
  os << "h=" << h << ": " << prev;
  for (int step = 0; step < 30 && prev >= floor; ++step) {
    h /= 2;
    double cur = structure_residual(gpd, alpha, covariant_exterior_D(gpd, alpha, alpha, conn, {h}), conn, points, seed, {h});
    os << "; h=" << h << ": " << cur;
    worst_ratio = std::min(worst_ratio, prev / std::max(cur, 1e-300));
    prev = cur;
  }
  r.notes.push_back(os.str());
  // passes when 1 / (worst ratio) < 1/2
  r.add("halving", std::isinf(worst_ratio) ? 0.0 : 1.0 / worst_ratio, 0.5, "inverse of the smallest gain per halving");
  return r;
}

// ------------------------------------------------------------- Lie functor

IMForm differentiate_to_im(const ActionGroupoid& gpd, const MultForm& alpha, double epsilon) {
  if (alpha.degree() != 1 || alpha.k() != gpd.k()) throw DimensionError("differentiate_to_im: alpha must be a k-valued 1-form");
  const int d = gpd.group().dim(), n = gpd.dim(), k = gpd.k();
  auto g = std::make_shared<const ActionGroupoid>(gpd);
  auto anchor = std::make_shared<const ExprProgram>(std::span<const Expr>(gpd.anchor().data));
  const double leaf_step = 1e-3;

  auto symbol = [g, alpha, anchor, d, n](int a, std::span<const double> x) {
    std::vector<double> rv = anchor->evaluate(x);
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w(i) = rv[static_cast<std::size_t>(i * d + a)];
    Arrow unit_arrow{Eigen::MatrixXd::Identity(g->group().size(), g->group().size()), Point(x.begin(), x.end())};
    GTangent t{unit(d, a), w};
    return alpha(unit_arrow, std::span<const GTangent>(&t, 1));
  };
  auto flowed = [g, alpha, d](int a, int i, std::span<const double> x, double e) {
    Eigen::MatrixXd ge = g->group().exp(e * unit(d, a));
    Eigen::MatrixXd gi = g->group().exp(-e * unit(d, a));
    Point xe = g->act(gi, x);
    if (!g->chart().contains(xe, 0.05)) {
      Report bad;
      bad.command = "lie-functor";
      bad.add("flow_in_chart", INFINITY, 0.0);
      throw PreconditionError("differentiate_to_im: the flow leaves the sampling region", bad);
    }
    GTangent t{Eigen::VectorXd::Zero(d), g->act_jacobian(gi, x).leftCols(g->dim()).col(i)};
    return Eigen::VectorXd(g->transport(ge, xe) * alpha(Arrow{ge, xe}, std::span<const GTangent>(&t, 1)));
  };

  // Leaf values are shared across components and across the many programs the checkers compile.
  struct Cache {
    std::unordered_map<std::string, Eigen::VectorXd> values;
    const Eigen::VectorXd& get(int a, int i, std::span<const double> x,
                               const std::function<Eigen::VectorXd()>& make) {
      std::string key(reinterpret_cast<const char*>(x.data()), x.size() * sizeof(double));
      key.append(reinterpret_cast<const char*>(&a), sizeof a);
      key.append(reinterpret_cast<const char*>(&i), sizeof i);
      auto it = values.find(key);
      if (it != values.end()) return it->second;
      if (values.size() > 200000) values.clear();
      return values.emplace(std::move(key), make()).first->second;
    }
  };
  auto cache = std::make_shared<Cache>();

  ExprMatrix l(k, d);
  std::vector<CoeffForm> lfr;
  for (int a = 0; a < d; ++a) {
    CoeffForm la(n, k, 1);
    for (int c = 0; c < k; ++c) {
      auto sf = std::make_shared<SampledFunction>();
      sf->name = "l" + std::to_string(a + 1) + "_" + std::to_string(c + 1);
      sf->step = leaf_step;
      sf->fn = [symbol, cache, a, c](std::span<const double> x) {
        return cache->get(a, -1, x, [&] { return symbol(a, x); })(c);
      };
      l(c, a) = Expr::sampled(sf);
      for (int i = 0; i < n; ++i) {
        auto lf = std::make_shared<SampledFunction>();
        lf->name = "L" + std::to_string(a + 1) + "_" + std::to_string(i + 1) + "_" + std::to_string(c + 1);
        lf->step = leaf_step;
        lf->fn = [flowed, cache, a, i, c, epsilon](std::span<const double> x) {
          return cache->get(a, i, x, [&] {
            const double e = epsilon;
            return Eigen::VectorXd((-flowed(a, i, x, 2 * e) + 8 * flowed(a, i, x, e) - 8 * flowed(a, i, x, -e) +
                                    flowed(a, i, x, -2 * e)) /
                                   (12 * e));
          })(c);
        };
        la.at(static_cast<std::size_t>(i), c) = Expr::sampled(lf);
      }
    }
    lfr.push_back(la);
  }
  IMForm constant = IMForm::one_form(gpd.algebroid(), l, lfr);
  return constant.change_frame(gpd.adapted_frame(), inverse(gpd.adapted_frame()));
}

Report lie_functor_report(const ActionGroupoid& gpd, const MultForm& alpha, const SamplePlan& plan, double tol) {
  Report r = fresh("lie-functor", plan.seed, plan.count);
  IMForm form = differentiate_to_im(gpd, alpha);
  const LieAlgebroid& a = form.algebroid();
  IdealBundle ideal(a, gpd.k());
  Report im = check_im_form(form, canonical_representation(a, ideal, plan), plan);
  for (const CheckResult& c : im.checks) r.add("im:" + c.name, c.max_residual, tol, c.note);
  r.discarded += im.discarded;
  bool predicate = im.flags.count("connection_predicate") && im.flags.at("connection_predicate");
  r.flags["connection_predicate"] = predicate;
  r.add("connection_predicate", predicate ? 0.0 : INFINITY, tol);
  if (!r.pass()) return r;
  CouplingData cd = extract_coupling(a, ideal, form, plan);
  Report st = check_structure_equations(cd, StructureVariant::S1S3, plan);
  for (const CheckResult& c : st.checks) r.add("coupling:" + c.name, c.max_residual, tol, c.note);
  return r;
}

// ---------------------------------------------------------------- fixtures

GroupoidFixture so2_trivial_fixture() {
  ExprMatrix k = ExprMatrix::identity(1);
  ActionGroupoid gpd(so2_group(), Chart(1), {Expr::coordinate(0)}, k);
  return {gpd, ExprMatrix::identity(1)};
}

GroupoidFixture so3_radial_fixture() {
  Chart chart(3, {{0.25, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}}, true);
  std::vector<Expr> action;
  for (int i = 0; i < 3; ++i) {
    Expr s(0.0);
    for (int j = 0; j < 3; ++j) s = s + Expr::coordinate(3 + 3 * i + j) * Expr::coordinate(j);
    action.push_back(s);
  }
  ExprMatrix k(3, 1), adapted = ExprMatrix::identity(3);
  Expr r2(0.0);
  for (int i = 0; i < 3; ++i) {
    k(i, 0) = Expr::coordinate(i);
    adapted(i, 0) = Expr::coordinate(i);
    r2 = r2 + Expr::coordinate(i) * Expr::coordinate(i);
  }
  ExprMatrix l(1, 3);
  for (int i = 0; i < 3; ++i) l(0, i) = Expr::coordinate(i) / r2;
  return {ActionGroupoid(so3_group(), chart, action, k, adapted), l};
}

}  // namespace imtk
