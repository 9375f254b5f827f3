// SPDX-License-Identifier: Apache-2.0
#include "imtk/model_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace imtk {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string join(const std::string& p, const std::string& key) { return p + "/" + key; }
std::string join(const std::string& p, std::size_t i) { return p + "/" + std::to_string(i); }

[[noreturn]] void schema_error(const std::string& p, const std::string& msg) {
  throw ModelError(ModelError::Kind::schema, p, "schema violation at " + (p.empty() ? "/" : p) + ": " + msg);
}

[[noreturn]] void dimension_error(const std::string& p, const std::string& other, const std::string& msg) {
  throw ModelError(ModelError::Kind::dimension, p, "dimension mismatch between " + p + " and " + other + ": " + msg);
}

void allow_keys(const json& j, const std::string& p, std::initializer_list<const char*> keys) {
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) schema_error(join(p, it.key()), "unknown property");
}

const json& object(const json& j, const std::string& p) {
  if (!j.is_object()) schema_error(p, "expected an object");
  return j;
}

const json& array(const json& j, const std::string& p) {
  if (!j.is_array()) schema_error(p, "expected an array");
  return j;
}

const json& member(const json& j, const std::string& p, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) schema_error(p, std::string("missing required property \"") + key + "\"");
  return *it;
}

const json* optional_member(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

int integer(const json& j, const std::string& p, int lo, int hi = 1 << 20) {
  if (!j.is_number_integer()) schema_error(p, "expected an integer");
  long long v = j.get<long long>();
  if (v < lo || v > hi) schema_error(p, "integer out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

double number(const json& j, const std::string& p) {
  if (!j.is_number()) schema_error(p, "expected a number");
  return j.get<double>();
}

std::string string(const json& j, const std::string& p) {
  if (!j.is_string()) schema_error(p, "expected a string");
  return j.get<std::string>();
}

Expr expression(const json& j, const std::string& p, int dim) {
  std::string text = string(j, p);
  try {
    return parse(text, dim);
  } catch (const ParseError& e) {
    std::ostringstream os;
    os << "parse error at " << p << ", offset " << e.offset() << ": " << e.what();
    throw ModelError(ModelError::Kind::parse, p, os.str(), e.offset());
  }
}

std::vector<Expr> expressions(const json& j, const std::string& p, int dim) {
  array(j, p);
  std::vector<Expr> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(expression(j[i], join(p, i), dim));
  return out;
}

ExprMatrix matrix(const json& j, const std::string& p, int dim) {
  array(j, p);
  if (j.empty()) return ExprMatrix(0, 0);
  int cols = -1;
  for (std::size_t i = 0; i < j.size(); ++i) {
    array(j[i], join(p, i));
    if (cols < 0) cols = static_cast<int>(j[i].size());
    else if (static_cast<int>(j[i].size()) != cols) schema_error(join(p, i), "rows have different lengths");
  }
  ExprMatrix m(static_cast<int>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i)
    for (std::size_t c = 0; c < j[i].size(); ++c)
      m(static_cast<int>(i), static_cast<int>(c)) = expression(j[i][c], join(join(p, i), c), dim);
  return m;
}

void expect_shape(const ExprMatrix& m, const std::string& p, int rows, const std::string& rows_from, int cols,
                  const std::string& cols_from) {
  if (m.rows != rows)
    dimension_error(p, rows_from, std::to_string(m.rows) + " rows, expected " + std::to_string(rows));
  if (m.rows > 0 && m.cols != cols)
    dimension_error(p, cols_from, std::to_string(m.cols) + " columns, expected " + std::to_string(cols));
}

ExprMatrix sized(ExprMatrix m, int rows, int cols) {
  if (m.rows == 0) return ExprMatrix(rows, cols);
  return m;
}

// ---------------------------------------------------------------- readers

Chart read_chart(const json& j, const std::string& p) {
  object(j, p);
  allow_keys(j, p, {"dim", "bounds", "exclude_origin"});
  const int n = integer(member(j, p, "dim"), join(p, "dim"), 0, 64);
  bool ex = false;
  if (const json* e = optional_member(j, "exclude_origin")) {
    if (!e->is_boolean()) schema_error(join(p, "exclude_origin"), "expected a boolean");
    ex = e->get<bool>();
  }
  const json* b = optional_member(j, "bounds");
  if (!b) return Chart(n, ex);
  std::string bp = join(p, "bounds");
  array(*b, bp);
  if (static_cast<int>(b->size()) != n) dimension_error(bp, join(p, "dim"), "one interval per coordinate");
  std::vector<std::pair<double, double>> bounds;
  for (std::size_t i = 0; i < b->size(); ++i) {
    std::string ip = join(bp, i);
    const json& iv = array((*b)[i], ip);
    if (iv.size() != 2) schema_error(ip, "expected [lo, hi]");
    double lo = number(iv[0], join(ip, 0)), hi = number(iv[1], join(ip, 1));
    if (!(lo < hi)) schema_error(ip, "empty interval");
    bounds.emplace_back(lo, hi);
  }
  return Chart(n, bounds, ex);
}

template <class Set>
void read_structure(const json& j, const std::string& p, int rank, int dim, Set&& set) {
  array(j, p);
  std::set<std::tuple<int, int, int>> seen;
  for (std::size_t e = 0; e < j.size(); ++e) {
    std::string ep = join(p, e);
    object(j[e], ep);
    allow_keys(j[e], ep, {"a", "b", "c", "value"});
    int a = integer(member(j[e], ep, "a"), join(ep, "a"), 1, rank);
    int b = integer(member(j[e], ep, "b"), join(ep, "b"), 1, rank);
    int c = integer(member(j[e], ep, "c"), join(ep, "c"), 1, rank);
    if (a == b) schema_error(ep, "a and b must differ");
    Expr v = expression(member(j[e], ep, "value"), join(ep, "value"), dim);
    if (a > b) {
      std::swap(a, b);
      v = -v;
    }
    if (!seen.insert({a, b, c}).second) schema_error(ep, "duplicate structure entry");
    set(a - 1, b - 1, c - 1, v);
  }
}

LieAlgebroid read_algebroid(const json& j, const std::string& p, const Chart& chart) {
  object(j, p);
  allow_keys(j, p, {"rank", "anchor", "structure"});
  const int r = integer(member(j, p, "rank"), join(p, "rank"), 0);
  std::string ap = join(p, "anchor");
  ExprMatrix anchor = matrix(member(j, p, "anchor"), ap, chart.dim);
  if (chart.dim > 0 && anchor.rows != 0 && anchor.rows != chart.dim)
    dimension_error(ap, "/chart/dim", "anchor has " + std::to_string(anchor.rows) + " rows, chart has dimension " +
                                          std::to_string(chart.dim));
  if (anchor.rows == 0 && r > 0 && chart.dim > 0) dimension_error(ap, "/chart/dim", "anchor is empty");
  if (anchor.rows > 0 && anchor.cols != r)
    dimension_error(ap, join(p, "rank"), "anchor is " + std::to_string(anchor.rows) + "x" + std::to_string(anchor.cols) +
                                             ", rank is " + std::to_string(r));
  LieAlgebroid a(chart, r, sized(anchor, chart.dim, r));
  if (const json* s = optional_member(j, "structure"))
    read_structure(*s, join(p, "structure"), r, chart.dim,
                   [&](int x, int y, int z, const Expr& v) { a.set_structure(x, y, z, v); });
  return a;
}

FiberBracket read_bracket(const json& j, const std::string& p, int dim) {
  object(j, p);
  allow_keys(j, p, {"rank", "structure"});
  const int k = integer(member(j, p, "rank"), join(p, "rank"), 0);
  FiberBracket br(k);
  if (const json* s = optional_member(j, "structure"))
    read_structure(*s, join(p, "structure"), k, dim, [&](int x, int y, int z, const Expr& v) { br.set(x, y, z, v); });
  return br;
}

LinearConnection read_connection(const json* j, const std::string& p, int n, int k, const std::string& k_from) {
  if (!j) return LinearConnection(n, k);
  array(*j, p);
  if (static_cast<int>(j->size()) != n) dimension_error(p, "/chart/dim", "one Christoffel matrix per coordinate");
  std::vector<ExprMatrix> gamma;
  for (std::size_t i = 0; i < j->size(); ++i) {
    std::string ip = join(p, i);
    ExprMatrix g = matrix((*j)[i], ip, n);
    expect_shape(g, ip, k, k_from, k, k_from);
    gamma.push_back(sized(g, k, k));
  }
  return LinearConnection(n, k, gamma);
}

// [{ "i": 1, "j": 2, "values": [...] }]
CoeffForm read_two_form(const json& j, const std::string& p, int n, int k, const std::string& k_from) {
  array(j, p);
  CoeffForm w(n, k, 2);
  for (std::size_t e = 0; e < j.size(); ++e) {
    std::string ep = join(p, e);
    object(j[e], ep);
    allow_keys(j[e], ep, {"i", "j", "values"});
    int i = integer(member(j[e], ep, "i"), join(ep, "i"), 1, n);
    int jj = integer(member(j[e], ep, "j"), join(ep, "j"), 1, n);
    if (i >= jj) schema_error(ep, "expected i < j");
    std::vector<Expr> v = expressions(member(j[e], ep, "values"), join(ep, "values"), n);
    if (static_cast<int>(v.size()) != k) dimension_error(join(ep, "values"), k_from, "one value per fiber index");
    std::vector<int> idx{i - 1, jj - 1};
    std::size_t t = w.tuple_index(idx);
    for (int c = 0; c < k; ++c) w.at(t, c) = v[static_cast<std::size_t>(c)];
  }
  return w;
}

std::vector<CoeffForm> read_one_forms(const json& j, const std::string& p, int count, const std::string& count_from,
                                      int n, int k, const std::string& k_from) {
  array(j, p);
  if (static_cast<int>(j.size()) != count) dimension_error(p, count_from, "one entry per frame index");
  std::vector<CoeffForm> out;
  for (std::size_t a = 0; a < j.size(); ++a) {
    std::string ap = join(p, a);
    ExprMatrix m = matrix(j[a], ap, n);
    expect_shape(m, ap, n, "/chart/dim", k, k_from);
    m = sized(m, n, k);
    CoeffForm w(n, k, 1);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < k; ++c) w.at(static_cast<std::size_t>(i), c) = m(i, c);
    out.push_back(w);
  }
  return out;
}

CouplingData read_coupling(const json& j, const std::string& p, const Chart& chart) {
  object(j, p);
  allow_keys(j, p, {"base", "kbracket", "nablaL", "U"});
  LieAlgebroid b = read_algebroid(member(j, p, "base"), join(p, "base"), chart);
  FiberBracket br = read_bracket(member(j, p, "kbracket"), join(p, "kbracket"), chart.dim);
  const int n = chart.dim, k = br.rank();
  std::string kp = join(p, "kbracket/rank");
  CouplingData cd(b, br, read_connection(optional_member(j, "nablaL"), join(p, "nablaL"), n, k, kp));
  if (const json* u = optional_member(j, "U")) {
    std::vector<CoeffForm> forms = read_one_forms(*u, join(p, "U"), b.rank(), join(p, "base/rank"), n, k, kp);
    for (int a = 0; a < b.rank(); ++a)
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < k; ++c) cd.U(a, i, c) = forms[static_cast<std::size_t>(a)].at(static_cast<std::size_t>(i), c);
  }
  return cd;
}

GroupoidSection read_groupoid(const json& j, const std::string& p, const Chart& chart) {
  object(j, p);
  allow_keys(j, p, {"group", "action", "ideal_frame", "adapted_frame", "splitting", "fd_step"});
  std::string gp = join(p, "group");
  const json& g = object(member(j, p, "group"), gp);
  allow_keys(g, gp, {"size", "basis"});
  const int big = integer(member(g, gp, "size"), join(gp, "size"), 1, 16);
  std::string bp = join(gp, "basis");
  const json& basis = array(member(g, gp, "basis"), bp);
  std::vector<Eigen::MatrixXd> mats;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    std::string ap = join(bp, a);
    array(basis[a], ap);
    if (static_cast<int>(basis[a].size()) != big) dimension_error(ap, join(gp, "size"), "basis matrix must be N x N");
    Eigen::MatrixXd m(big, big);
    for (int r = 0; r < big; ++r) {
      std::string rp = join(ap, static_cast<std::size_t>(r));
      const json& row = array(basis[a][static_cast<std::size_t>(r)], rp);
      if (static_cast<int>(row.size()) != big) dimension_error(rp, join(gp, "size"), "basis matrix must be N x N");
      for (int c = 0; c < big; ++c) m(r, c) = number(row[static_cast<std::size_t>(c)], join(rp, static_cast<std::size_t>(c)));
    }
    mats.push_back(m);
  }
  MatrixGroup group;
  try {
    group = MatrixGroup(big, mats);
  } catch (const std::invalid_argument& e) {
    schema_error(bp, e.what());
  }
  const int n = chart.dim, d = group.dim();
  std::string actp = join(p, "action");
  std::vector<Expr> action = expressions(member(j, p, "action"), actp, n + big * big);
  if (static_cast<int>(action.size()) != n) dimension_error(actp, "/chart/dim", "one component per coordinate");
  std::string kp = join(p, "ideal_frame");
  ExprMatrix kframe = matrix(member(j, p, "ideal_frame"), kp, n);
  if (kframe.rows != d) dimension_error(kp, bp, "one row per Lie algebra basis element");
  ExprMatrix adapted;
  if (const json* ad = optional_member(j, "adapted_frame")) {
    std::string adp = join(p, "adapted_frame");
    adapted = matrix(*ad, adp, n);
    expect_shape(adapted, adp, d, bp, d, bp);
  }
  std::string sp = join(p, "splitting");
  ExprMatrix l = matrix(member(j, p, "splitting"), sp, n);
  expect_shape(l, sp, kframe.cols, kp, d, bp);
  FiniteDifference fd;
  if (const json* h = optional_member(j, "fd_step")) {
    fd.step = number(*h, join(p, "fd_step"));
    if (!(fd.step > 0)) schema_error(join(p, "fd_step"), "step must be positive");
  }
  try {
    return {ActionGroupoid(group, chart, action, kframe, adapted), l, fd};
  } catch (const DimensionError& e) {
    dimension_error(p, "/chart", e.what());
  } catch (const std::invalid_argument& e) {
    schema_error(p, e.what());
  }
}

ExampleParams read_params(const std::string& family, const json& j, const std::string& p, const Chart& chart) {
  object(j, p);
  const int n = chart.dim;
  if (family == "product") {
    allow_keys(j, p, {"base", "algebra"});
    return ProductParams{read_algebroid(member(j, p, "base"), join(p, "base"), chart),
                         read_bracket(member(j, p, "algebra"), join(p, "algebra"), n)};
  }
  if (family == "lie_algebra_bundle") {
    allow_keys(j, p, {"algebra", "k", "connection"});
    FiberBracket br = read_bracket(member(j, p, "algebra"), join(p, "algebra"), n);
    int k = integer(member(j, p, "k"), join(p, "k"), 0, br.rank());
    return LieAlgebraBundleParams{chart, br, k,
                                  read_connection(optional_member(j, "connection"), join(p, "connection"), n, k, join(p, "k"))};
  }
  if (family == "action") {
    allow_keys(j, p, {"algebra", "fields", "frame", "k", "splitting"});
    FiberBracket br = read_bracket(member(j, p, "algebra"), join(p, "algebra"), n);
    const int r = br.rank();
    std::string rp = join(p, "algebra/rank");
    ExprMatrix fields = matrix(member(j, p, "fields"), join(p, "fields"), n);
    expect_shape(fields, join(p, "fields"), n, "/chart/dim", r, rp);
    ExprMatrix frame;
    if (const json* f = optional_member(j, "frame")) {
      frame = matrix(*f, join(p, "frame"), n);
      expect_shape(frame, join(p, "frame"), r, rp, r, rp);
    }
    int k = integer(member(j, p, "k"), join(p, "k"), 0, r);
    ExprMatrix l = matrix(member(j, p, "splitting"), join(p, "splitting"), n);
    expect_shape(l, join(p, "splitting"), k, join(p, "k"), r, rp);
    return ActionParams{chart, br, sized(fields, n, r), frame, k, sized(l, k, r)};
  }
  if (family == "principal_type" || family == "principal_type_flat" || family == "transitive") {
    allow_keys(j, p, {"base", "algebra", "connection", "omega"});
    LieAlgebroid b = read_algebroid(member(j, p, "base"), join(p, "base"), chart);
    FiberBracket br = read_bracket(member(j, p, "algebra"), join(p, "algebra"), n);
    std::string kp = join(p, "algebra/rank");
    LinearConnection conn = read_connection(optional_member(j, "connection"), join(p, "connection"), n, br.rank(), kp);
    CoeffForm omega(n, br.rank(), 2);
    if (const json* o = optional_member(j, "omega")) omega = read_two_form(*o, join(p, "omega"), n, br.rank(), kp);
    return PrincipalParams{b, br, conn, omega};
  }
  if (family == "rank_one") {
    allow_keys(j, p, {"base", "v", "lambda"});
    LieAlgebroid b = read_algebroid(member(j, p, "base"), join(p, "base"), chart);
    std::vector<Expr> v = expressions(member(j, p, "v"), join(p, "v"), n);
    std::vector<Expr> lam = expressions(member(j, p, "lambda"), join(p, "lambda"), n);
    return RankOneParams{b, v, lam};
  }
  schema_error(p, "unknown example family \"" + family + "\"");
}

ExampleSpec read_example(const json& j, const std::string& p, const Chart& chart) {
  object(j, p);
  allow_keys(j, p, {"name", "preset", "params"});
  const json* preset = optional_member(j, "preset");
  const json* params = optional_member(j, "params");
  if ((preset != nullptr) == (params != nullptr)) schema_error(p, "exactly one of \"preset\" and \"params\" is required");
  if (preset) {
    std::string name = string(*preset, join(p, "preset"));
    ExampleSpec s;
    try {
      s = example_preset(name);
    } catch (const std::invalid_argument&) {
      schema_error(join(p, "preset"), "unknown preset \"" + name + "\"");
    }
    if (const json* nm = optional_member(j, "name")) s.name = string(*nm, join(p, "name"));
    return s;
  }
  std::string name = string(member(j, p, "name"), join(p, "name"));
  return {name, read_params(name, *params, join(p, "params"), chart)};
}

WitnessSection read_witness(const json& j, const std::string& p, const Chart& chart, const LieAlgebroid* base) {
  object(j, p);
  allow_keys(j, p, {"kind", "h", "z", "theta", "omega", "im"});
  WitnessSection w;
  std::string kind = string(member(j, p, "kind"), join(p, "kind"));
  try {
    w.kind = parse_witness_kind(kind);
  } catch (const std::invalid_argument&) {
    schema_error(join(p, "kind"), "unknown witness kind \"" + kind + "\"");
  }
  const int n = chart.dim;
  if (const json* h = optional_member(j, "h")) w.witness.h = expression(*h, join(p, "h"), n);
  if (const json* z = optional_member(j, "z")) {
    w.witness.z = expressions(*z, join(p, "z"), n);
    if (base && static_cast<int>(w.witness.z->size()) != base->rank())
      dimension_error(join(p, "z"), "/coupling/base/rank", "one entry per frame index of B");
  }
  if (const json* t = optional_member(j, "theta")) {
    std::vector<Expr> c = expressions(*t, join(p, "theta"), n);
    if (static_cast<int>(c.size()) != n) dimension_error(join(p, "theta"), "/chart/dim", "one component per coordinate");
    w.witness.theta = CoeffForm::one_form(c);
  }
  if (const json* o = optional_member(j, "omega")) w.witness.omega = read_two_form(*o, join(p, "omega"), n, 1, join(p, "omega"));
  if (const json* im = optional_member(j, "im")) {
    std::string ip = join(p, "im");
    if (!base) schema_error(ip, "an IM witness needs a coupling or algebroid section");
    object(*im, ip);
    allow_keys(*im, ip, {"symbol", "op"});
    std::string sp = join(ip, "symbol");
    const json& sym = array(member(*im, ip, "symbol"), sp);
    const json& op = array(member(*im, ip, "op"), join(ip, "op"));
    if (static_cast<int>(sym.size()) != base->rank()) dimension_error(sp, "/coupling/base/rank", "one entry per frame index");
    if (static_cast<int>(op.size()) != base->rank()) dimension_error(join(ip, "op"), "/coupling/base/rank", "one entry per frame index");
    std::vector<CoeffForm> s, o;
    for (std::size_t a = 0; a < sym.size(); ++a) {
      std::vector<Expr> c = expressions(sym[a], join(sp, a), n);
      if (static_cast<int>(c.size()) != n) dimension_error(join(sp, a), "/chart/dim", "one component per coordinate");
      s.push_back(CoeffForm::one_form(c));
      o.push_back(read_two_form(op[a], join(join(ip, "op"), a), n, 1, join(ip, "op")));
    }
    w.witness.im = IMForm(*base, 1, 2, s, o);
  }
  return w;
}

// ---------------------------------------------------------------- writers

ojson dump_matrix(const ExprMatrix& m) {
  ojson out = ojson::array();
  for (int i = 0; i < m.rows; ++i) {
    ojson row = ojson::array();
    for (int j = 0; j < m.cols; ++j) row.push_back(to_string(m(i, j)));
    out.push_back(row);
  }
  return out;
}

ojson dump_exprs(const std::vector<Expr>& v) {
  ojson out = ojson::array();
  for (const Expr& e : v) out.push_back(to_string(e));
  return out;
}

template <class Get>
ojson dump_structure(int rank, Get&& get) {
  ojson out = ojson::array();
  for (int a = 0; a < rank; ++a)
    for (int b = a + 1; b < rank; ++b)
      for (int c = 0; c < rank; ++c) {
        const Expr& e = get(a, b, c);
        if (e.is_zero()) continue;
        out.push_back(ojson{{"a", a + 1}, {"b", b + 1}, {"c", c + 1}, {"value", to_string(e)}});
      }
  return out;
}

ojson dump_chart(const Chart& c) {
  ojson b = ojson::array();
  for (auto [lo, hi] : c.bounds) b.push_back(ojson::array({lo, hi}));
  return ojson{{"dim", c.dim}, {"bounds", b}, {"exclude_origin", c.excluded_origin}};
}

ojson dump_algebroid(const LieAlgebroid& a) {
  return ojson{{"rank", a.rank()},
               {"anchor", dump_matrix(a.anchor())},
               {"structure", dump_structure(a.rank(), [&](int x, int y, int z) -> const Expr& { return a.structure(x, y, z); })}};
}

ojson dump_bracket(const FiberBracket& b) {
  return ojson{{"rank", b.rank()},
               {"structure", dump_structure(b.rank(), [&](int x, int y, int z) -> const Expr& { return b.structure(x, y, z); })}};
}

ojson dump_connection(const LinearConnection& c) {
  ojson out = ojson::array();
  for (const ExprMatrix& g : c.christoffel()) out.push_back(dump_matrix(g));
  return out;
}

ojson dump_one_form_matrix(const CoeffForm& w) {
  ExprMatrix m(w.dim(), w.rank());
  for (int i = 0; i < w.dim(); ++i)
    for (int c = 0; c < w.rank(); ++c) m(i, c) = w.at(static_cast<std::size_t>(i), c);
  return dump_matrix(m);
}

ojson dump_two_form(const CoeffForm& w) {
  ojson out = ojson::array();
  for (std::size_t t = 0; t < w.tuple_count(); ++t) {
    bool zero = true;
    ojson vals = ojson::array();
    for (int c = 0; c < w.rank(); ++c) {
      zero = zero && w.at(t, c).is_zero();
      vals.push_back(to_string(w.at(t, c)));
    }
    if (zero) continue;
    out.push_back(ojson{{"i", w.tuple(t)[0] + 1}, {"j", w.tuple(t)[1] + 1}, {"values", vals}});
  }
  return out;
}

ojson dump_coupling(const CouplingData& cd) {
  ojson u = ojson::array();
  for (int a = 0; a < cd.base_rank(); ++a) u.push_back(dump_one_form_matrix(cd.u_form(a)));
  return ojson{{"base", dump_algebroid(cd.base)},
               {"kbracket", dump_bracket(cd.kbracket)},
               {"nablaL", dump_connection(cd.nabla)},
               {"U", u}};
}

ojson dump_params(const ExampleParams& params) {
  return std::visit(
      [](const auto& p) -> ojson {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ProductParams>) {
          return ojson{{"base", dump_algebroid(p.base)}, {"algebra", dump_bracket(p.algebra)}};
        } else if constexpr (std::is_same_v<T, LieAlgebraBundleParams>) {
          return ojson{{"algebra", dump_bracket(p.algebra)}, {"k", p.k}, {"connection", dump_connection(p.connection)}};
        } else if constexpr (std::is_same_v<T, ActionParams>) {
          ojson o{{"algebra", dump_bracket(p.algebra)}, {"fields", dump_matrix(p.fields)}};
          if (p.frame.rows) o["frame"] = dump_matrix(p.frame);
          o["k"] = p.k;
          o["splitting"] = dump_matrix(p.splitting);
          return o;
        } else if constexpr (std::is_same_v<T, PrincipalParams>) {
          return ojson{{"base", dump_algebroid(p.base)},
                       {"algebra", dump_bracket(p.algebra)},
                       {"connection", dump_connection(p.connection)},
                       {"omega", dump_two_form(p.omega)}};
        } else {
          return ojson{{"base", dump_algebroid(p.base)}, {"v", dump_exprs(p.v)}, {"lambda", dump_exprs(p.lambda)}};
        }
      },
      params);
}

ojson dump_groupoid(const GroupoidSection& g) {
  const MatrixGroup& grp = g.gpd.group();
  ojson basis = ojson::array();
  for (int a = 0; a < grp.dim(); ++a) {
    ojson m = ojson::array();
    for (int r = 0; r < grp.size(); ++r) {
      ojson row = ojson::array();
      for (int c = 0; c < grp.size(); ++c) row.push_back(grp.basis(a)(r, c));
      m.push_back(row);
    }
    basis.push_back(m);
  }
  return ojson{{"group", ojson{{"size", grp.size()}, {"basis", basis}}},
               {"action", dump_exprs(g.gpd.action())},
               {"ideal_frame", dump_matrix(g.gpd.kframe())},
               {"adapted_frame", dump_matrix(g.gpd.adapted_frame())},
               {"splitting", dump_matrix(g.splitting)},
               {"fd_step", g.fd.step}};
}

ojson dump_witness(const WitnessSection& w) {
  ojson o{{"kind", to_string(w.kind)}};
  if (w.witness.h) o["h"] = to_string(*w.witness.h);
  if (w.witness.z) o["z"] = dump_exprs(*w.witness.z);
  if (w.witness.theta) {
    std::vector<Expr> c;
    for (int i = 0; i < w.witness.theta->dim(); ++i) c.push_back(w.witness.theta->at(static_cast<std::size_t>(i), 0));
    o["theta"] = dump_exprs(c);
  }
  if (w.witness.omega) o["omega"] = dump_two_form(*w.witness.omega);
  if (w.witness.im) {
    ojson sym = ojson::array(), op = ojson::array();
    const IMForm& f = *w.witness.im;
    for (int a = 0; a < f.algebroid().rank(); ++a) {
      std::vector<Expr> c;
      for (int i = 0; i < f.algebroid().dim(); ++i) c.push_back(f.symbol(a).at(static_cast<std::size_t>(i), 0));
      sym.push_back(dump_exprs(c));
      op.push_back(dump_two_form(f.op(a)));
    }
    o["im"] = ojson{{"symbol", sym}, {"op", op}};
  }
  return o;
}

}  // namespace

// ------------------------------------------------------------------ public

std::vector<std::string> ModelFile::sections() const {
  std::vector<std::string> s{"chart"};
  if (algebroid) s.push_back("algebroid");
  if (ideal) s.push_back("ideal");
  if (im_form) s.push_back("im_form");
  if (coupling) s.push_back("coupling");
  if (groupoid) s.push_back("groupoid");
  if (example) s.push_back("example");
  if (witness) s.push_back("rank_one_witness");
  return s;
}

ModelFile parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ModelError(ModelError::Kind::syntax, "", std::string("malformed JSON: ") + e.what(), e.byte);
  }
  object(doc, "");
  allow_keys(doc, "", {"format", "version", "description", "chart", "algebroid", "ideal", "im_form", "coupling",
                       "groupoid", "example", "rank_one_witness"});
  if (const json* f = optional_member(doc, "format"))
    if (string(*f, "/format") != "imtk-model") schema_error("/format", "expected \"imtk-model\"");
  if (const json* d = optional_member(doc, "description")) string(*d, "/description");
  integer(member(doc, "", "version"), "/version", kModelVersion, kModelVersion);

  ModelFile m;
  m.chart = read_chart(member(doc, "", "chart"), "/chart");
  const int n = m.chart.dim;
  if (const json* a = optional_member(doc, "algebroid")) m.algebroid = read_algebroid(*a, "/algebroid", m.chart);
  if (const json* i = optional_member(doc, "ideal")) {
    if (!m.algebroid) schema_error("/ideal", "requires the algebroid section");
    object(*i, "/ideal");
    allow_keys(*i, "/ideal", {"k"});
    m.ideal = integer(member(*i, "/ideal", "k"), "/ideal/k", 1);
    if (*m.ideal > m.algebroid->rank())
      dimension_error("/ideal/k", "/algebroid/rank", "ideal rank exceeds the algebroid rank");
  }
  if (const json* f = optional_member(doc, "im_form")) {
    if (!m.ideal) schema_error("/im_form", "requires the algebroid and ideal sections");
    object(*f, "/im_form");
    allow_keys(*f, "/im_form", {"l", "L"});
    const int r = m.algebroid->rank(), k = *m.ideal;
    ExprMatrix l = matrix(member(*f, "/im_form", "l"), "/im_form/l", n);
    expect_shape(l, "/im_form/l", k, "/ideal/k", r, "/algebroid/rank");
    std::vector<CoeffForm> lfr =
        read_one_forms(member(*f, "/im_form", "L"), "/im_form/L", r, "/algebroid/rank", n, k, "/ideal/k");
    m.im_form = IMForm::one_form(*m.algebroid, sized(l, k, r), lfr);
  }
  if (const json* c = optional_member(doc, "coupling")) m.coupling = read_coupling(*c, "/coupling", m.chart);
  if (const json* g = optional_member(doc, "groupoid")) m.groupoid = read_groupoid(*g, "/groupoid", m.chart);
  if (const json* e = optional_member(doc, "example")) m.example = read_example(*e, "/example", m.chart);
  if (const json* w = optional_member(doc, "rank_one_witness")) {
    std::optional<LieAlgebroid> base;
    if (m.coupling) base = m.coupling->base;
    else if (m.algebroid && m.algebroid->rank() > 0) base = rank_one_cochains(*m.algebroid).base;
    m.witness = read_witness(*w, "/rank_one_witness", m.chart, base ? &*base : nullptr);
  }
  return m;
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError(ModelError::Kind::io, "", "cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string dump_model(const ModelFile& m) {
  ojson doc{{"format", "imtk-model"}, {"version", kModelVersion}, {"chart", dump_chart(m.chart)}};
  if (m.algebroid) doc["algebroid"] = dump_algebroid(*m.algebroid);
  if (m.ideal) doc["ideal"] = ojson{{"k", *m.ideal}};
  if (m.im_form) {
    ojson lfr = ojson::array();
    for (int a = 0; a < m.im_form->algebroid().rank(); ++a) lfr.push_back(dump_one_form_matrix(m.im_form->op(a)));
    doc["im_form"] = ojson{{"l", dump_matrix(m.im_form->symbol_matrix())}, {"L", lfr}};
  }
  if (m.coupling) doc["coupling"] = dump_coupling(*m.coupling);
  if (m.groupoid) doc["groupoid"] = dump_groupoid(*m.groupoid);
  if (m.example) doc["example"] = ojson{{"name", m.example->name}, {"params", dump_params(m.example->params)}};
  if (m.witness) doc["rank_one_witness"] = dump_witness(*m.witness);
  return doc.dump(2) + "\n";
}

std::vector<std::string> example_presets() {
  return {"product_so3", "so3_radial", "principal_flat", "principal_so3", "transitive_flat", "transitive_so3"};
}

ExampleSpec example_preset(const std::string& name) {
  if (name == "product_so3") return product_so3_example();
  if (name == "so3_radial") return {"action", so3_radial_action()};
  if (name == "principal_flat") return principal_flat_example();
  if (name == "principal_so3") return principal_so3_example();
  if (name == "transitive_flat") {
    ExampleSpec s = principal_flat_example();
    s.name = "transitive";
    return s;
  }
  if (name == "transitive_so3") {
    ExampleSpec s = principal_so3_example();
    s.name = "transitive";
    return s;
  }
  throw std::invalid_argument("unknown example preset \"" + name + "\"");
}

}  // namespace imtk
