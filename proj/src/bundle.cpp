// SPDX-License-Identifier: Apache-2.0
#include "imtk/bundle.hpp"

#include <map>
#include <mutex>

#include "imtk/report.hpp"

namespace imtk {

// ---------------------------------------------------------------- sections

Section operator+(const Section& a, const Section& b) {
  if (a.size() != b.size()) throw DimensionError("section sum: ranks differ");
  Section s(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) s[k] = a[k] + b[k];
  return s;
}

Section operator-(const Section& a, const Section& b) {
  if (a.size() != b.size()) throw DimensionError("section difference: ranks differ");
  Section s(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) s[k] = a[k] - b[k];
  return s;
}

Section operator*(const Expr& f, const Section& s) {
  Section out(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = f * s[k];
  return out;
}

Section zero_section(int rank) { return Section(static_cast<std::size_t>(rank)); }

Section frame_section(int rank, int a) {
  Section s = zero_section(rank);
  s[static_cast<std::size_t>(a)] = Expr(1.0);
  return s;
}

Expr derive(const VectorField& x, const Expr& f) {
  Expr out;
  if (f.is_constant()) return out;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!x[i].is_zero()) out += x[i] * differentiate(f, static_cast<int>(i));
  return out;
}

Section derive(const VectorField& x, const Section& s) {
  Section out(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) out[k] = derive(x, s[k]);
  return out;
}

VectorField vf_bracket(const VectorField& x, const VectorField& y) {
  if (x.size() != y.size()) throw DimensionError("vector field bracket: dimensions differ");
  VectorField z(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) z[k] = derive(x, y[k]) - derive(y, x[k]);
  return z;
}

Expr random_polynomial(int dim, int degree, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Expr p = Expr(u(rng));
  for (int d = 1; d <= degree; ++d) {
    // monomials of degree d as nondecreasing index tuples
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    for (;;) {
      Expr m = Expr(u(rng));
      for (int i : idx) m = m * Expr::coordinate(i);
      p += m;
      int j = d - 1;
      while (j >= 0 && idx[static_cast<std::size_t>(j)] == dim - 1) --j;
      if (j < 0) break;
      ++idx[static_cast<std::size_t>(j)];
      for (int k = j + 1; k < d; ++k) idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(j)];
    }
  }
  return p;
}

Section random_section(int rank, int dim, std::mt19937_64& rng, int degree) {
  Section s(static_cast<std::size_t>(rank));
  for (auto& c : s) c = random_polynomial(dim, degree, rng);
  return s;
}

// ------------------------------------------------------------ combinatorics

const std::vector<std::vector<int>>& increasing_tuples(int n, int k) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::vector<std::vector<int>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(n, k);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<std::vector<int>> out;
  if (k >= 0 && k <= n) {
    std::vector<int> t(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) t[static_cast<std::size_t>(j)] = j;
    for (;;) {
      out.push_back(t);
      int j = k - 1;
      while (j >= 0 && t[static_cast<std::size_t>(j)] == n - k + j) --j;
      if (j < 0) break;
      ++t[static_cast<std::size_t>(j)];
      for (int m = j + 1; m < k; ++m) t[static_cast<std::size_t>(m)] = t[static_cast<std::size_t>(m - 1)] + 1;
    }
  }
  return cache.emplace(key, std::move(out)).first->second;
}

int sort_sign(std::vector<int>& idx) {
  int sign = 1;
  for (std::size_t i = 1; i < idx.size(); ++i) {
    for (std::size_t j = i; j > 0 && idx[j - 1] > idx[j]; --j) {
      std::swap(idx[j - 1], idx[j]);
      sign = -sign;
    }
  }
  for (std::size_t i = 1; i < idx.size(); ++i)
    if (idx[i - 1] == idx[i]) return 0;
  return sign;
}

namespace {
double factorial(int k) {
  double f = 1.0;
  for (int j = 2; j <= k; ++j) f *= j;
  return f;
}

std::vector<int> complement_in(const std::vector<int>& whole, const std::vector<int>& part) {
  std::vector<int> rest;
  for (int v : whole) {
    bool in = false;
    for (int p : part) in = in || p == v;
    if (!in) rest.push_back(v);
  }
  return rest;
}

// sign of the permutation taking (s, rest) to sorted order
int shuffle_sign(const std::vector<int>& s, const std::vector<int>& rest) {
  std::vector<int> cat = s;
  cat.insert(cat.end(), rest.begin(), rest.end());
  return sort_sign(cat);
}
}  // namespace

// -------------------------------------------------------------- CoeffForm

CoeffForm::CoeffForm(int dim, int rank, int degree)
    : dim_(dim), rank_(rank), degree_(degree) {
  if (degree < 0 || degree > dim) throw DimensionError("form degree exceeds chart dimension");
  if (rank < 0) throw DimensionError("form values need rank >= 0");
  tuples_ = &increasing_tuples(dim, degree);
  comps_.resize(tuples_->size() * static_cast<std::size_t>(rank));
}

CoeffForm CoeffForm::from_section(int dim, const Section& s) {
  CoeffForm w(dim, static_cast<int>(s.size()), 0);
  for (std::size_t a = 0; a < s.size(); ++a) w.at(0, static_cast<int>(a)) = s[a];
  return w;
}

CoeffForm CoeffForm::one_form(const std::vector<Expr>& comps) {
  CoeffForm w(static_cast<int>(comps.size()), 1, 1);
  for (std::size_t i = 0; i < comps.size(); ++i) w.at(i, 0) = comps[i];
  return w;
}

std::size_t CoeffForm::tuple_index(std::span<const int> inc) const {
  // rank of the combination in lexicographic order
  std::size_t idx = 0;
  int prev = -1;
  const int k = degree_;
  auto binom = [](int n, int r) -> std::size_t {
    if (r < 0 || r > n) return 0;
    double b = 1.0;
    for (int j = 1; j <= r; ++j) b = b * (n - r + j) / j;
    return static_cast<std::size_t>(b + 0.5);
  };
  for (int j = 0; j < k; ++j) {
    for (int v = prev + 1; v < inc[static_cast<std::size_t>(j)]; ++v) idx += binom(dim_ - v - 1, k - j - 1);
    prev = inc[static_cast<std::size_t>(j)];
  }
  return idx;
}

Expr CoeffForm::component(std::span<const int> slots, int a) const {
  std::vector<int> idx(slots.begin(), slots.end());
  int s = sort_sign(idx);
  if (s == 0) return Expr();
  const Expr& c = at(tuple_index(idx), a);
  return s > 0 ? c : -c;
}

Section CoeffForm::value(std::span<const int> slots) const {
  Section out(static_cast<std::size_t>(rank_));
  std::vector<int> idx(slots.begin(), slots.end());
  int s = sort_sign(idx);
  if (s == 0) return out;
  std::size_t t = tuple_index(idx);
  for (int a = 0; a < rank_; ++a) out[static_cast<std::size_t>(a)] = s > 0 ? at(t, a) : -at(t, a);
  return out;
}

Section CoeffForm::as_section() const {
  if (degree_ != 0) throw DimensionError("as_section on a form of positive degree");
  return Section(comps_.begin(), comps_.end());
}

std::vector<double> CoeffForm::evaluate(std::span<const double> point,
                                        const std::vector<std::vector<double>>& vectors) const {
  if (static_cast<int>(vectors.size()) != degree_) throw DimensionError("form evaluated on wrong number of vectors");
  ExprProgram prog(comps_);
  auto c = prog.evaluate(point);
  std::vector<double> out(static_cast<std::size_t>(rank_), 0.0);
  const int k = degree_;
  for (std::size_t t = 0; t < tuple_count(); ++t) {
    const auto& tup = tuple(t);
    Eigen::MatrixXd m(k, k);
    for (int r = 0; r < k; ++r)
      for (int j = 0; j < k; ++j) m(r, j) = vectors[static_cast<std::size_t>(j)][static_cast<std::size_t>(tup[static_cast<std::size_t>(r)])];
    double det = k == 0 ? 1.0 : m.determinant();
    for (int a = 0; a < rank_; ++a)
      out[static_cast<std::size_t>(a)] += det * c[t * static_cast<std::size_t>(rank_) + static_cast<std::size_t>(a)];
  }
  return out;
}

CoeffForm operator+(const CoeffForm& a, const CoeffForm& b) {
  if (a.dim() != b.dim() || a.rank() != b.rank() || a.degree() != b.degree())
    throw DimensionError("form sum: shapes differ");
  CoeffForm c(a.dim(), a.rank(), a.degree());
  for (std::size_t t = 0; t < a.tuple_count(); ++t)
    for (int r = 0; r < a.rank(); ++r) c.at(t, r) = a.at(t, r) + b.at(t, r);
  return c;
}

CoeffForm operator-(const CoeffForm& a, const CoeffForm& b) { return a + Expr(-1.0) * b; }

CoeffForm operator*(const Expr& f, const CoeffForm& w) {
  CoeffForm c(w.dim(), w.rank(), w.degree());
  for (std::size_t t = 0; t < w.tuple_count(); ++t)
    for (int r = 0; r < w.rank(); ++r) c.at(t, r) = f * w.at(t, r);
  return c;
}

CoeffForm apply(const ExprMatrix& m, const CoeffForm& w) {
  if (m.cols != w.rank()) throw DimensionError("apply: matrix does not match form values");
  CoeffForm c(w.dim(), m.rows, w.degree());
  for (std::size_t t = 0; t < w.tuple_count(); ++t)
    for (int b = 0; b < m.rows; ++b) {
      Expr s;
      for (int a = 0; a < m.cols; ++a) s += m(b, a) * w.at(t, a);
      c.at(t, b) = s;
    }
  return c;
}

CoeffForm interior(const VectorField& x, const CoeffForm& w) {
  if (static_cast<int>(x.size()) != w.dim()) throw DimensionError("interior: vector field dimension");
  if (w.degree() == 0) throw DimensionError("interior product of a 0-form");
  CoeffForm c(w.dim(), w.rank(), w.degree() - 1);
  for (std::size_t t = 0; t < c.tuple_count(); ++t) {
    std::vector<int> slots(1);
    slots.insert(slots.end(), c.tuple(t).begin(), c.tuple(t).end());
    for (int i = 0; i < w.dim(); ++i) {
      if (x[static_cast<std::size_t>(i)].is_zero()) continue;
      slots[0] = i;
      for (int a = 0; a < w.rank(); ++a) c.at(t, a) += x[static_cast<std::size_t>(i)] * w.component(slots, a);
    }
  }
  return c;
}

CoeffForm wedge(const CoeffForm& scalar, const CoeffForm& w) {
  if (scalar.rank() != 1) throw DimensionError("wedge: first factor must be scalar");
  if (scalar.dim() != w.dim()) throw DimensionError("wedge: dimensions differ");
  const int p = scalar.degree();
  const int q = w.degree();
  CoeffForm c(w.dim(), w.rank(), p + q);
  for (std::size_t t = 0; t < c.tuple_count(); ++t) {
    const auto& whole = c.tuple(t);
    for (const auto& pick : increasing_tuples(p + q, p)) {
      std::vector<int> s;
      for (int j : pick) s.push_back(whole[static_cast<std::size_t>(j)]);
      std::vector<int> rest = complement_in(whole, s);
      const int sg = shuffle_sign(s, rest);
      const Expr& f = scalar.at(scalar.tuple_index(s), 0);
      if (f.is_zero()) continue;
      std::size_t tr = w.tuple_index(rest);
      for (int a = 0; a < w.rank(); ++a) {
        Expr term = f * w.at(tr, a);
        c.at(t, a) = sg > 0 ? c.at(t, a) + term : c.at(t, a) - term;
      }
    }
  }
  return c;
}

namespace {
CoeffForm d_impl(const LinearConnection* conn, const CoeffForm& w) {
  if (w.degree() >= w.dim()) throw DimensionError("exterior derivative: degree overflow");
  CoeffForm c(w.dim(), w.rank(), w.degree() + 1);
  for (std::size_t t = 0; t < c.tuple_count(); ++t) {
    const auto& tup = c.tuple(t);
    for (std::size_t j = 0; j < tup.size(); ++j) {
      std::vector<int> rest;
      for (std::size_t m = 0; m < tup.size(); ++m)
        if (m != j) rest.push_back(tup[m]);
      const std::size_t tr = w.tuple_index(rest);
      const int i = tup[j];
      for (int b = 0; b < w.rank(); ++b) {
        Expr term = differentiate(w.at(tr, b), i);
        if (conn) {
          const ExprMatrix& g = conn->christoffel(i);
          for (int a = 0; a < w.rank(); ++a) term += g(b, a) * w.at(tr, a);
        }
        c.at(t, b) = (j % 2 == 0) ? c.at(t, b) + term : c.at(t, b) - term;
      }
    }
  }
  return c;
}
}  // namespace

CoeffForm exterior_derivative(const CoeffForm& w) { return d_impl(nullptr, w); }

// ------------------------------------------------------- LinearConnection

LinearConnection::LinearConnection(int dim, int rank)
    : dim_(dim), rank_(rank), gamma_(static_cast<std::size_t>(dim), ExprMatrix(rank, rank)) {}

LinearConnection::LinearConnection(int dim, int rank, std::vector<ExprMatrix> christoffel)
    : dim_(dim), rank_(rank), gamma_(std::move(christoffel)) {
  if (static_cast<int>(gamma_.size()) != dim) throw DimensionError("connection: need one matrix per direction");
  for (const auto& g : gamma_)
    if (g.rows != rank || g.cols != rank) throw DimensionError("connection: Christoffel matrix does not match rank");
}

LinearConnection LinearConnection::change_frame(const ExprMatrix& p, const ExprMatrix& p_inv) const {
  std::vector<ExprMatrix> g;
  for (int i = 0; i < dim_; ++i) g.push_back(p_inv * (differentiate(p, i) + christoffel(i) * p));
  return LinearConnection(dim_, rank_, std::move(g));
}

Section covariant_derivative(const LinearConnection& conn, const VectorField& x, const Section& s) {
  if (static_cast<int>(s.size()) != conn.rank()) throw DimensionError("covariant derivative: rank mismatch");
  if (static_cast<int>(x.size()) != conn.dim()) throw DimensionError("covariant derivative: dimension mismatch");
  Section out = derive(x, s);
  for (int i = 0; i < conn.dim(); ++i) {
    const Expr& xi = x[static_cast<std::size_t>(i)];
    if (xi.is_zero()) continue;
    const ExprMatrix& g = conn.christoffel(i);
    for (int b = 0; b < conn.rank(); ++b) {
      Expr acc;
      for (int a = 0; a < conn.rank(); ++a) acc += g(b, a) * s[static_cast<std::size_t>(a)];
      out[static_cast<std::size_t>(b)] += xi * acc;
    }
  }
  return out;
}

CoeffForm exterior_covariant_derivative(const LinearConnection& conn, const CoeffForm& w) {
  if (conn.rank() != w.rank() || conn.dim() != w.dim())
    throw DimensionError("exterior covariant derivative: bundle mismatch");
  return d_impl(&conn, w);
}

// ---------------------------------------------------------------- curvature

const ExprMatrix& Curvature::at(int i, int j) const {
  const auto& tups = increasing_tuples(dim, 2);
  for (std::size_t t = 0; t < tups.size(); ++t)
    if (tups[t][0] == i && tups[t][1] == j) return r[t];
  throw std::out_of_range("curvature index");
}

ExprMatrix Curvature::value(int i, int j) const {
  if (i == j) return ExprMatrix(rank, rank);
  if (i < j) return at(i, j);
  ExprMatrix m = at(j, i);
  for (auto& e : m.data) e = -e;
  return m;
}

CoeffForm Curvature::apply(const Section& s) const {
  CoeffForm c(dim, rank, 2);
  for (std::size_t t = 0; t < r.size(); ++t)
    for (int b = 0; b < rank; ++b) {
      Expr acc;
      for (int a = 0; a < rank; ++a) acc += r[t](b, a) * s[static_cast<std::size_t>(a)];
      c.at(t, b) = acc;
    }
  return c;
}

double Curvature::max_abs(const Chart& chart, int points) const {
  std::vector<Expr> all;
  for (const auto& m : r) all.insert(all.end(), m.data.begin(), m.data.end());
  if (all.empty()) return 0.0;
  ExprProgram prog(all);
  double worst = 0.0;
  for_each_sample(chart, SamplePlan{11, points}, [&](const Point& p) {
    for (double v : prog.evaluate(p)) worst = std::max(worst, std::abs(v));
  });
  return worst;
}

bool Curvature::is_flat(const Chart& chart, double tol, int points) const {
  return max_abs(chart, points) < tol;
}

Curvature curvature_tensor(const LinearConnection& conn) {
  Curvature c;
  c.dim = conn.dim();
  c.rank = conn.rank();
  for (const auto& t : increasing_tuples(conn.dim(), 2)) {
    const int i = t[0];
    const int j = t[1];
    const ExprMatrix& gi = conn.christoffel(i);
    const ExprMatrix& gj = conn.christoffel(j);
    c.r.push_back(differentiate(gj, i) - differentiate(gi, j) + commutator(gi, gj));
  }
  return c;
}

// ------------------------------------------------------------ FiberBracket

FiberBracket::FiberBracket(int rank)
    : rank_(rank), c_(static_cast<std::size_t>(rank * rank * rank)) {}

void FiberBracket::set(int a, int b, int c, const Expr& e) {
  if (a == b && !e.is_zero()) throw std::invalid_argument("fiber bracket: [e_a, e_a] must vanish");
  c_[static_cast<std::size_t>((a * rank_ + b) * rank_ + c)] = e;
  c_[static_cast<std::size_t>((b * rank_ + a) * rank_ + c)] = -e;
}

const Expr& FiberBracket::structure(int a, int b, int c) const {
  return c_[static_cast<std::size_t>((a * rank_ + b) * rank_ + c)];
}

Section FiberBracket::bracket(const Section& x, const Section& y) const {
  if (static_cast<int>(x.size()) != rank_ || static_cast<int>(y.size()) != rank_)
    throw DimensionError("fiber bracket: rank mismatch");
  Section z = zero_section(rank_);
  for (int a = 0; a < rank_; ++a) {
    if (x[static_cast<std::size_t>(a)].is_zero()) continue;
    for (int b = 0; b < rank_; ++b) {
      if (y[static_cast<std::size_t>(b)].is_zero()) continue;
      Expr xy = x[static_cast<std::size_t>(a)] * y[static_cast<std::size_t>(b)];
      for (int c = 0; c < rank_; ++c) {
        const Expr& s = structure(a, b, c);
        if (!s.is_zero()) z[static_cast<std::size_t>(c)] += xy * s;
      }
    }
  }
  return z;
}

ExprMatrix FiberBracket::ad(const Section& u) const {
  ExprMatrix m(rank_, rank_);
  for (int a = 0; a < rank_; ++a) {
    Section col = bracket(u, frame_section(rank_, a));
    for (int c = 0; c < rank_; ++c) m(c, a) = col[static_cast<std::size_t>(c)];
  }
  return m;
}

bool FiberBracket::is_abelian() const {
  for (const auto& e : c_)
    if (!e.is_zero()) return false;
  return true;
}

double FiberBracket::jacobi_residual(const Chart& chart, int points) const {
  std::vector<Expr> all;
  for (int a = 0; a < rank_; ++a)
    for (int b = a + 1; b < rank_; ++b)
      for (int c = b + 1; c < rank_; ++c) {
        Section ea = frame_section(rank_, a), eb = frame_section(rank_, b), ec = frame_section(rank_, c);
        Section j = bracket(ea, bracket(eb, ec)) + bracket(eb, bracket(ec, ea)) + bracket(ec, bracket(ea, eb));
        all.insert(all.end(), j.begin(), j.end());
      }
  if (all.empty()) return 0.0;
  ExprProgram prog(all);
  double worst = 0.0;
  for_each_sample(chart, SamplePlan{13, points}, [&](const Point& p) {
    for (double v : prog.evaluate(p)) worst = std::max(worst, std::abs(v));
  });
  return worst;
}

CoeffForm fiber_bracket_wedge(const FiberBracket& br, const CoeffForm& b, const CoeffForm& g) {
  if (b.rank() != br.rank() || g.rank() != br.rank())
    throw DimensionError("fiber bracket wedge: forms not valued in the bracket bundle");
  if (b.dim() != g.dim()) throw DimensionError("fiber bracket wedge: dimensions differ");
  const int k = b.degree();
  const int l = g.degree();
  if (k + l > b.dim()) throw DimensionError("fiber bracket wedge: degree overflow");
  const Expr weight(factorial(k) * factorial(l));
  CoeffForm c(b.dim(), br.rank(), k + l);
  for (std::size_t t = 0; t < c.tuple_count(); ++t) {
    const auto& whole = c.tuple(t);
    Section acc = zero_section(br.rank());
    for (const auto& pick : increasing_tuples(k + l, k)) {
      std::vector<int> s;
      for (int j : pick) s.push_back(whole[static_cast<std::size_t>(j)]);
      std::vector<int> rest = complement_in(whole, s);
      const int sg = shuffle_sign(s, rest);
      Section term = br.bracket(b.value(s), g.value(rest));
      acc = sg > 0 ? acc + term : acc - term;
    }
    for (int a = 0; a < br.rank(); ++a) c.at(t, a) = weight * acc[static_cast<std::size_t>(a)];
  }
  return c;
}

}  // namespace imtk
