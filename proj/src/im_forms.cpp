// SPDX-License-Identifier: Apache-2.0
#include "imtk/im_forms.hpp"

#include <cmath>

namespace imtk {

namespace {

CoeffForm scalar_differential(int dim, const Expr& f) {
  std::vector<Expr> comps;
  for (int i = 0; i < dim; ++i) comps.push_back(differentiate(f, i));
  return CoeffForm::one_form(comps);
}

void push_components(std::vector<Expr>& out, const CoeffForm& w) {
  out.insert(out.end(), w.components().begin(), w.components().end());
}

}  // namespace

// ------------------------------------------------------------------ IMForm

IMForm::IMForm(LieAlgebroid a, int value_rank, int degree, std::vector<CoeffForm> symbol,
               std::vector<CoeffForm> op)
    : a_(std::move(a)), value_rank_(value_rank), degree_(degree), l_(std::move(symbol)), op_(std::move(op)) {
  if (degree < 1) throw DimensionError("IM forms have degree at least 1");
  const auto r = static_cast<std::size_t>(a_.rank());
  if (l_.size() != r || op_.size() != r) throw DimensionError("IM form: one frame value per section of A");
  for (std::size_t b = 0; b < r; ++b) {
    if (l_[b].degree() != degree - 1 || l_[b].rank() != value_rank || l_[b].dim() != a_.dim())
      throw DimensionError("IM form: symbol has the wrong shape");
    if (op_[b].degree() != degree || op_[b].rank() != value_rank || op_[b].dim() != a_.dim())
      throw DimensionError("IM form: operator value has the wrong shape");
  }
}

IMForm IMForm::one_form(const LieAlgebroid& a, const ExprMatrix& l, std::vector<CoeffForm> lfr) {
  if (l.cols != a.rank()) throw DimensionError("IM 1-form: symbol must have one column per frame index");
  std::vector<CoeffForm> sym;
  for (int b = 0; b < a.rank(); ++b) {
    Section s(static_cast<std::size_t>(l.rows));
    for (int c = 0; c < l.rows; ++c) s[static_cast<std::size_t>(c)] = l(c, b);
    sym.push_back(CoeffForm::from_section(a.dim(), s));
  }
  return IMForm(a, l.rows, 1, std::move(sym), std::move(lfr));
}

IMForm IMForm::zero(const LieAlgebroid& a, int value_rank, int degree) {
  std::vector<CoeffForm> sym(static_cast<std::size_t>(a.rank()), CoeffForm(a.dim(), value_rank, degree - 1));
  std::vector<CoeffForm> op(static_cast<std::size_t>(a.rank()), CoeffForm(a.dim(), value_rank, degree));
  return IMForm(a, value_rank, degree, std::move(sym), std::move(op));
}

CoeffForm IMForm::L(const Section& alpha) const {
  if (static_cast<int>(alpha.size()) != a_.rank()) throw DimensionError("IM form: section rank mismatch");
  CoeffForm out(a_.dim(), value_rank_, degree_);
  for (int b = 0; b < a_.rank(); ++b) {
    const Expr& f = alpha[static_cast<std::size_t>(b)];
    if (f.is_zero()) continue;
    out = out + f * op(b);
    CoeffForm df = scalar_differential(a_.dim(), f);
    bool flat = true;
    for (const Expr& e : df.components()) flat = flat && e.is_zero();
    if (!flat) out = out + wedge(df, symbol(b));
  }
  return out;
}

CoeffForm IMForm::l(const Section& alpha) const {
  if (static_cast<int>(alpha.size()) != a_.rank()) throw DimensionError("IM form: section rank mismatch");
  CoeffForm out(a_.dim(), value_rank_, degree_ - 1);
  for (int b = 0; b < a_.rank(); ++b)
    if (!alpha[static_cast<std::size_t>(b)].is_zero()) out = out + alpha[static_cast<std::size_t>(b)] * symbol(b);
  return out;
}

ExprMatrix IMForm::symbol_matrix() const {
  if (degree_ != 1) throw DimensionError("symbol matrix exists for IM 1-forms only");
  ExprMatrix m(value_rank_, a_.rank());
  for (int b = 0; b < a_.rank(); ++b)
    for (int c = 0; c < value_rank_; ++c) m(c, b) = symbol(b).at(0, c);
  return m;
}

IMForm IMForm::change_frame(const ExprMatrix& p, const ExprMatrix& p_inv) const {
  LieAlgebroid na = a_.change_frame(p, p_inv);
  std::vector<CoeffForm> sym, op;
  for (int b = 0; b < a_.rank(); ++b) {
    Section col(static_cast<std::size_t>(a_.rank()));
    for (int c = 0; c < a_.rank(); ++c) col[static_cast<std::size_t>(c)] = p(c, b);
    sym.push_back(l(col));
    op.push_back(L(col));
  }
  return IMForm(std::move(na), value_rank_, degree_, std::move(sym), std::move(op));
}

IMForm IMForm::perturbed(int a, const CoeffForm& w) const {
  IMForm out = *this;
  out.op_[static_cast<std::size_t>(a)] = out.op_[static_cast<std::size_t>(a)] + w;
  return out;
}

IMForm operator+(const IMForm& x, const IMForm& y) {
  if (x.degree() != y.degree() || x.value_rank() != y.value_rank() || x.algebroid().rank() != y.algebroid().rank())
    throw DimensionError("IM forms of different shapes");
  std::vector<CoeffForm> sym, op;
  for (int b = 0; b < x.algebroid().rank(); ++b) {
    sym.push_back(x.symbol(b) + y.symbol(b));
    op.push_back(x.op(b) + y.op(b));
  }
  return IMForm(x.algebroid(), x.value_rank(), x.degree(), std::move(sym), std::move(op));
}

IMForm operator-(const IMForm& x, const IMForm& y) {
  std::vector<CoeffForm> sym, op;
  for (int b = 0; b < y.algebroid().rank(); ++b) {
    sym.push_back(Expr(-1.0) * y.symbol(b));
    op.push_back(Expr(-1.0) * y.op(b));
  }
  return x + IMForm(y.algebroid(), y.value_rank(), y.degree(), std::move(sym), std::move(op));
}

bool is_connection_form(const IMForm& form, const SamplePlan& plan) {
  if (form.degree() != 1 || form.value_rank() > form.algebroid().rank()) return false;
  std::vector<Expr> diff;
  for (int a = 0; a < form.value_rank(); ++a)
    for (int c = 0; c < form.value_rank(); ++c) {
      Expr e = form.symbol(a).at(0, c) - Expr(a == c ? 1.0 : 0.0);
      if (e.is_constant() && !e.is_zero()) return false;
      diff.push_back(e);
    }
  return sampled_max_abs(form.algebroid().chart(), diff, plan) < 1e-12;
}

Report check_im_form(const IMForm& form, const ARepresentation& rep, const SamplePlan& plan) {
  const LieAlgebroid& a = form.algebroid();
  if (rep.rank != form.value_rank() || rep.algebroid.rank() != a.rank())
    throw DimensionError("check_im_form: representation does not act on the value bundle");
  Report out;
  out.command = "check_im_form";
  out.seed = plan.seed;
  out.samples = plan.count;
  const int r = a.rank();

  struct Pair {
    Section x, y;
    bool diagonal;
  };
  std::vector<Pair> pairs;
  for (int p = 0; p < r; ++p)
    for (int q = p; q < r; ++q) pairs.push_back({frame_section(r, p), frame_section(r, q), p == q});
  std::mt19937_64 rng(plan.seed * 0x9E3779B97F4A7C15ULL + 11);
  for (int t = 0; t < 3; ++t) {
    Section x = random_section(r, a.dim(), rng);
    Section y = random_section(r, a.dim(), rng);
    pairs.push_back({x, y, false});
  }

  std::vector<Expr> skew, br_l, br_s;
  for (const auto& [x, y, diagonal] : pairs) {
    VectorField rx = a.anchor_of(x), ry = a.anchor_of(y);
    if (form.degree() >= 2) push_components(skew, interior(rx, form.l(y)) + interior(ry, form.l(x)));
    if (diagonal) continue;
    Section xy = a.bracket(x, y);
    push_components(br_l, form.L(xy) - lie_derivative_form(x, rep, form.L(y)) +
                              lie_derivative_form(y, rep, form.L(x)));
    push_components(br_s, form.l(xy) - lie_derivative_form(x, rep, form.l(y)) + interior(ry, form.L(x)));
  }
  const Chart& chart = a.chart();
  out.add("im_skew", sampled_max_abs(chart, skew, plan, &out.discarded), 1e-8);
  out.add("im_bracket_L", sampled_max_abs(chart, br_l, plan, &out.discarded), 1e-8);
  out.add("im_bracket_l", sampled_max_abs(chart, br_s, plan, &out.discarded), 1e-8);
  out.flags["connection_predicate"] = is_connection_form(form, plan);
  return out;
}

ARepresentation induced_representation(const LieAlgebroid& a, const LinearConnection& conn) {
  if (conn.dim() != a.dim()) throw DimensionError("induced representation: chart mismatch");
  ARepresentation rep;
  rep.algebroid = a;
  rep.rank = conn.rank();
  for (int b = 0; b < a.rank(); ++b) {
    ExprMatrix m(conn.rank(), conn.rank());
    for (int i = 0; i < a.dim(); ++i) {
      const Expr& rho = a.anchor()(i, b);
      if (rho.is_zero()) continue;
      ExprMatrix g = conn.christoffel(i);
      for (auto& e : g.data) e = rho * e;
      m = m + g;
    }
    rep.coeffs.push_back(m);
  }
  return rep;
}

IMForm d_im(const LinearConnection& conn, const ARepresentation& rep, const IMForm& form, const SamplePlan& plan) {
  if (conn.rank() != form.value_rank()) throw DimensionError("d_im: connection on the wrong bundle");
  if (form.degree() + 1 > form.algebroid().dim()) throw DimensionError("d_im: degree overflow");
  Report inv = check_A_invariant(conn, rep, plan);
  if (!inv.pass()) throw PreconditionError("d_im: connection is not A-invariant\n" + inv.summary(), inv);
  std::vector<CoeffForm> sym, op;
  for (int b = 0; b < form.algebroid().rank(); ++b) {
    sym.push_back(form.op(b) - exterior_covariant_derivative(conn, form.symbol(b)));
    op.push_back(exterior_covariant_derivative(conn, form.op(b)));
  }
  return IMForm(form.algebroid(), form.value_rank(), form.degree() + 1, std::move(sym), std::move(op));
}

// ---------------------------------------------------------------- cochains

AlgebroidCochain::AlgebroidCochain(int r, int vr, int d)
    : rank(r), value_rank(vr), degree(d), values(increasing_tuples(r, d).size(), zero_section(vr)) {}

Section AlgebroidCochain::frame_value(std::span<const int> idx) const {
  std::vector<int> sorted(idx.begin(), idx.end());
  int sign = sort_sign(sorted);
  if (sign == 0) return zero_section(value_rank);
  const auto& tuples = increasing_tuples(rank, degree);
  std::size_t t = 0;
  while (t < tuples.size() && tuples[t] != sorted) ++t;
  if (t == tuples.size()) throw DimensionError("cochain: frame index out of range");
  return sign > 0 ? values[t] : Expr(-1.0) * values[t];
}

Section AlgebroidCochain::value(const std::vector<Section>& alphas) const {
  if (static_cast<int>(alphas.size()) != degree) throw DimensionError("cochain evaluated on wrong number of sections");
  Section out = zero_section(value_rank);
  std::vector<int> idx(static_cast<std::size_t>(degree), 0);
  const int k = degree;
  while (true) {
    Expr w(1.0);
    for (int m = 0; m < k && !w.is_zero(); ++m)
      w = w * alphas[static_cast<std::size_t>(m)][static_cast<std::size_t>(idx[static_cast<std::size_t>(m)])];
    if (!w.is_zero()) out = out + w * frame_value(idx);
    int m = k - 1;
    while (m >= 0 && ++idx[static_cast<std::size_t>(m)] == rank) idx[static_cast<std::size_t>(m--)] = 0;
    if (m < 0) break;
  }
  return out;
}

Section contract(const CoeffForm& w, const std::vector<VectorField>& xs) {
  if (static_cast<int>(xs.size()) != w.degree()) throw DimensionError("contract: wrong number of vector fields");
  CoeffForm cur = w;
  for (const auto& x : xs) cur = interior(x, cur);
  return cur.as_section();
}

AlgebroidCochain chain_map(const IMForm& form) {
  const LieAlgebroid& a = form.algebroid();
  AlgebroidCochain out(a.rank(), form.value_rank(), form.degree());
  const auto& tuples = increasing_tuples(a.rank(), form.degree());
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    std::vector<VectorField> xs;
    for (std::size_t m = 1; m < tuples[t].size(); ++m) xs.push_back(a.anchor_of(frame_section(a.rank(), tuples[t][m])));
    out.values[t] = contract(form.symbol(tuples[t][0]), xs);
  }
  return out;
}

AlgebroidCochain cochain_differential(const AlgebroidCochain& w, const ARepresentation& rep) {
  const LieAlgebroid& a = rep.algebroid;
  if (w.rank != a.rank() || w.value_rank != rep.rank) throw DimensionError("cochain differential: shape mismatch");
  AlgebroidCochain out(w.rank, w.value_rank, w.degree + 1);
  const auto& tuples = increasing_tuples(w.rank, w.degree + 1);
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    const auto& s = tuples[t];
    Section acc = zero_section(w.value_rank);
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::vector<int> rest;
      for (std::size_t m = 0; m < s.size(); ++m)
        if (m != i) rest.push_back(s[m]);
      Section term = rep.act(frame_section(a.rank(), s[i]), w.frame_value(rest));
      acc = i % 2 == 0 ? acc + term : acc - term;
    }
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        Section br = a.frame_bracket(s[i], s[j]);
        std::vector<int> slots{0};
        for (std::size_t m = 0; m < s.size(); ++m)
          if (m != i && m != j) slots.push_back(s[m]);
        Section term = zero_section(w.value_rank);
        for (int c = 0; c < a.rank(); ++c) {
          if (br[static_cast<std::size_t>(c)].is_zero()) continue;
          slots[0] = c;
          term = term + br[static_cast<std::size_t>(c)] * w.frame_value(slots);
        }
        acc = (i + j) % 2 == 0 ? acc + term : acc - term;
      }
    out.values[t] = acc;
  }
  return out;
}

double cochain_difference(const Chart& chart, const AlgebroidCochain& x, const AlgebroidCochain& y,
                          const SamplePlan& plan) {
  if (x.rank != y.rank || x.value_rank != y.value_rank || x.degree != y.degree)
    throw DimensionError("cochains of different shapes");
  std::vector<Expr> diff;
  for (std::size_t t = 0; t < x.values.size(); ++t) {
    Section d = x.values[t] - y.values[t];
    diff.insert(diff.end(), d.begin(), d.end());
  }
  return sampled_max_abs(chart, diff, plan);
}

// ------------------------------------------------------------------ center

namespace {

std::vector<Expr> structure_list(const FiberBracket& br) {
  std::vector<Expr> out;
  const int k = br.rank();
  for (int d = 0; d < k; ++d)
    for (int a = 0; a < k; ++a)
      for (int c = 0; c < k; ++c) out.push_back(br.structure(d, a, c));
  return out;
}

// Rows (a, c), column d: the coefficient of u^d in [u, e_a]^c.
Eigen::MatrixXd stacked_ad(int k, std::span<const double> vals) {
  Eigen::MatrixXd m(k * k, k);
  for (int d = 0; d < k; ++d)
    for (int a = 0; a < k; ++a)
      for (int c = 0; c < k; ++c) m(a * k + c, d) = vals[static_cast<std::size_t>((d * k + a) * k + c)];
  return m;
}

}  // namespace

Eigen::MatrixXd center_basis(const FiberBracket& br, std::span<const double> point, double threshold) {
  std::vector<Expr> s = structure_list(br);
  ExprProgram prog(s);
  auto v = prog.evaluate(point);
  return kernel_basis(stacked_ad(br.rank(), v), threshold);
}

int center_rank(const FiberBracket& br, const Chart& chart, const SamplePlan& plan) {
  std::vector<Expr> s = structure_list(br);
  ExprProgram prog(s);
  int dim = -1;
  for_each_sample(chart, plan, [&](const Point& p) {
    auto v = prog.evaluate(p);
    int d = static_cast<int>(kernel_basis(stacked_ad(br.rank(), v)).cols());
    if (dim >= 0 && d != dim)
      throw DegeneracyError("center dimension varies over the chart (" + std::to_string(dim) + " vs " +
                            std::to_string(d) + ")");
    dim = d;
  });
  return dim;
}

double center_residual(const FiberBracket& br, const Chart& chart, std::span<const Section> sections,
                       const SamplePlan& plan) {
  const int k = br.rank();
  std::vector<Expr> all = structure_list(br);
  const std::size_t base = all.size();
  for (const auto& s : sections) {
    if (static_cast<int>(s.size()) != k) throw DimensionError("center residual: section rank mismatch");
    all.insert(all.end(), s.begin(), s.end());
  }
  ExprProgram prog(all);
  double worst = 0.0;
  int dim = -1;
  for_each_sample(chart, plan, [&](const Point& p) {
    auto v = prog.evaluate(p);
    Eigen::MatrixXd kb = kernel_basis(stacked_ad(k, v));
    if (dim >= 0 && kb.cols() != dim) throw DegeneracyError("center dimension varies over the chart");
    dim = static_cast<int>(kb.cols());
    for (std::size_t s = 0; s < sections.size(); ++s) {
      Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(v.data() + base + s * static_cast<std::size_t>(k), k);
      Eigen::VectorXd off = u - kb * (kb.transpose() * u);
      worst = std::max(worst, off.cwiseAbs().maxCoeff());
    }
  });
  return worst;
}

}  // namespace imtk
