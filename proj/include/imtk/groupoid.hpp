// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "imtk/algebroid.hpp"
#include "imtk/im_forms.hpp"

namespace imtk {

/// Matrix Lie group given by a basis X_1..X_d of its Lie algebra in gl(N).
class MatrixGroup {
 public:
  MatrixGroup() = default;
  /// Throws std::invalid_argument unless the basis is independent and closes under commutators.
  MatrixGroup(int n, std::vector<Eigen::MatrixXd> basis);

  int size() const { return n_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  const Eigen::MatrixXd& basis(int a) const { return basis_[static_cast<std::size_t>(a)]; }

  Eigen::MatrixXd hat(const Eigen::VectorXd& v) const;
  /// Least-squares coordinates; `residual` receives the distance to the span.
  Eigen::VectorXd vee(const Eigen::MatrixXd& m, double* residual = nullptr) const;
  /// Ad_g in basis coordinates.
  Eigen::MatrixXd adjoint(const Eigen::MatrixXd& g) const;
  Eigen::MatrixXd exp(const Eigen::VectorXd& v) const { return expm(hat(v)); }
  double structure(int a, int b, int c) const;
  FiberBracket bracket() const;
  double closure_residual() const { return closure_; }

  /// Scaling and squaring with a Taylor series truncated at 1e-12.
  static Eigen::MatrixXd expm(const Eigen::MatrixXd& m);
  /// exp(-T) d/de exp(T + e Y) at e = 0.
  static Eigen::MatrixXd dexp_left(const Eigen::MatrixXd& t, const Eigen::MatrixXd& y);

 private:
  int n_ = 0;
  std::vector<Eigen::MatrixXd> basis_;
  Eigen::MatrixXd gram_;  // least-squares normal matrix
  std::vector<double> c_;
  double closure_ = 0.0;
};

MatrixGroup so2_group();
MatrixGroup so3_group();  ///< (X_a) v = e_a x v

/// Arrow (g, x) from x to g.x.
struct Arrow {
  Eigen::MatrixXd g;
  Point x;
};

/// Tangent vector at an arrow: g . hat(v) on the group, w on M.
struct GTangent {
  Eigen::VectorXd v;
  Eigen::VectorXd w;
};

/// Composable pair ((g1, g2 x), (g2, x)).
struct ComposablePair {
  Eigen::MatrixXd g1;
  Eigen::MatrixXd g2;
  Point x;
};

/// Tangent to the composable pairs: (g1 hat(v1), g2 hat(v2), w).
struct PairTangent {
  Eigen::VectorXd v1;
  Eigen::VectorXd v2;
  Eigen::VectorXd w;
};

/// Action groupoid G x M with a bundle of ideals k spanned by the columns of K(x).
class ActionGroupoid {
 public:
  ActionGroupoid() = default;
  /// action: n expressions in the variables x_1..x_n followed by the entries of g (row-major).
  /// kframe: d x k. adapted: d x d with kframe as its first columns; may be empty when k = d.
  ActionGroupoid(MatrixGroup group, Chart chart, std::vector<Expr> action, ExprMatrix kframe,
                 ExprMatrix adapted = {});

  const MatrixGroup& group() const { return group_; }
  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim; }
  int k() const { return kframe_.cols; }
  const std::vector<Expr>& action() const { return action_; }
  const ExprMatrix& kframe() const { return kframe_; }
  const ExprMatrix& adapted_frame() const { return adapted_; }

  Point act(const Eigen::MatrixXd& g, std::span<const double> x) const;
  /// Derivative of (g, x) -> g.x along (g hat(v), w).
  Eigen::VectorXd act_derivative(const Eigen::MatrixXd& g, std::span<const double> x,
                                 const Eigen::VectorXd& v, const Eigen::VectorXd& w) const;
  /// D_x(g . ) at x.
  Eigen::MatrixXd act_jacobian(const Eigen::MatrixXd& g, std::span<const double> x) const;

  Eigen::MatrixXd ideal_basis(std::span<const double> x) const;
  /// Ad_g : k_x -> k_{g x} in frame coordinates.
  Eigen::MatrixXd transport(const Eigen::MatrixXd& g, std::span<const double> x) const;
  /// [u, v] on k_x in frame coordinates.
  Eigen::VectorXd bracket(std::span<const double> x, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& v) const;

  /// rho(X_a) = -(X_a)_M, as an n x d matrix of expressions.
  const ExprMatrix& anchor() const { return anchor_; }
  /// g x M in the constant frame.
  LieAlgebroid algebroid() const;
  /// g x M in the adapted frame, with k first.
  LieAlgebroid adapted_algebroid() const;

  /// Unit, associativity of the action, k in ker rho and Ad-invariance of k.
  Report check(const SamplePlan& plan = {}) const;

  /// g1, g2 = exp of vectors of norm at most 1, x from the chart.
  ComposablePair random_pair(std::mt19937_64& rng) const;
  Arrow random_arrow(std::mt19937_64& rng) const;
  GTangent random_tangent(std::mt19937_64& rng) const;

 private:
  MatrixGroup group_;
  Chart chart_;
  std::vector<Expr> action_;
  ExprMatrix kframe_;
  ExprMatrix adapted_;
  ExprMatrix anchor_;
  ExprProgram act_prog_;
  ExprProgram jac_prog_;  // n x (n + N^2), row-major
  ExprProgram k_prog_;
};

/// k-valued form on the arrows of degree 0, 1, 2 or 3, read in the frame of k at the source.
class MultForm {
 public:
  using Fn = std::function<Eigen::VectorXd(const Arrow&, std::span<const GTangent>)>;
  /// Values on every tuple of the basis (e_a, 0), (0, e_i), flattened row-major.
  using TensorFn = std::function<std::vector<Eigen::VectorXd>(const Arrow&)>;

  MultForm() = default;
  MultForm(int degree, int k, Fn fn) : degree_(degree), k_(k), fn_(std::move(fn)) {}
  MultForm(int degree, int k, Fn fn, TensorFn tensor)
      : degree_(degree), k_(k), fn_(std::move(fn)), tensor_(std::move(tensor)) {}

  int degree() const { return degree_; }
  int k() const { return k_; }
  Eigen::VectorXd operator()(const Arrow& p, std::span<const GTangent> t) const;
  const TensorFn& tensor() const { return tensor_; }

 private:
  int degree_ = 0;
  int k_ = 0;
  Fn fn_;
  TensorFn tensor_;
};

MultForm operator+(const MultForm& a, const MultForm& b);

/// Multilinearity and antisymmetry at sampled arrows, tolerance 1e-9.
Report check_multform(const ActionGroupoid& gpd, const MultForm& w, const SamplePlan& plan = {});

/// Residuals of the splitting preconditions: l K = 1 and equivariance.
Report splitting_preconditions(const ActionGroupoid& gpd, const ExprMatrix& l,
                               const SamplePlan& plan = {});

/// alpha(g hat(v), w) = l(x) v; l is k x d. Throws PreconditionError if l is not an equivariant splitting.
MultForm connection_from_splitting(const ActionGroupoid& gpd, const ExprMatrix& l,
                                   const SamplePlan& plan = {});

/// nabla_X xi = l(x) X(K xi): Christoffel symbols l d_i K.
LinearConnection splitting_connection(const ActionGroupoid& gpd, const ExprMatrix& l);

/// s^*beta for a k-valued 1-form beta on M.
MultForm source_pullback(const ActionGroupoid& gpd, const CoeffForm& beta);

/// (delta f)(g, x) = Ad_g^-1 f(g x) - f(x).
MultForm delta_function(const ActionGroupoid& gpd,
                        std::function<Eigen::VectorXd(std::span<const double>)> f);

/// Throws std::invalid_argument unless s(first) = t(second).
ComposablePair compose(const ActionGroupoid& gpd, const Arrow& first, const Arrow& second);

/// g2^-1 . pr1^* w - m^* w + pr2^* w at a composable pair.
Eigen::VectorXd simplicial_delta(const ActionGroupoid& gpd, const MultForm& w,
                                 const ComposablePair& pair, std::span<const PairTangent> t);

/// max |delta w| at `pairs` random composable pairs and tangents.
double delta_residual(const ActionGroupoid& gpd, const MultForm& w, int pairs, std::uint64_t seed);

struct FiniteDifference {
  double step = 1e-5;
};

/// (d^{nabla^s} w)(h X_1, .., h X_{p+1}), the horizontal projection being read off alpha.
/// Accepts degree 1 and 2.
MultForm covariant_exterior_D(const ActionGroupoid& gpd, const MultForm& w, const MultForm& alpha,
                              const LinearConnection& conn, FiniteDifference fd = {});

/// (d^{nabla^s} w) on unprojected tangents.
MultForm covariant_exterior_d(const ActionGroupoid& gpd, const MultForm& w,
                              const LinearConnection& conn, FiniteDifference fd = {});

/// Relative residual of Omega = d alpha + [alpha, alpha]/2 at `points` arrows.
double structure_residual(const ActionGroupoid& gpd, const MultForm& alpha, const MultForm& omega,
                          const LinearConnection& conn, int points, std::uint64_t seed,
                          FiniteDifference fd = {});

/// delta alpha, delta Omega, the structure equation and Bianchi's identity.
///
/// Tolerances: 1e-7 for delta alpha, 1e-4 (relative) for the others. A note is
/// added when the structure residual moves by more than 10x between h and h/2.
Report check_groupoid_properties(const ActionGroupoid& gpd, const MultForm& alpha,
                                 const MultForm& omega, const LinearConnection& conn,
                                 const SamplePlan& plan = {}, FiniteDifference fd = {});

/// Structure residuals at h, h/2, ... starting from `start`; passes when each halving
/// above `floor` gains at least a factor 2.
Report step_halving(const ActionGroupoid& gpd, const MultForm& alpha, const LinearConnection& conn,
                    double start = 0.1, double floor = 1e-6, int points = 10,
                    std::uint64_t seed = 42);

/// (L, l) of alpha on the adapted algebroid, with sampled leaves.
///
/// l(a) = alpha at units contracted with (a, rho a); L(a) differentiates
/// Ad_{exp(e a)} alpha along the flow (g, x) -> (g exp(e a), exp(-e a) x).
/// Throws PreconditionError if the flow leaves the chart.
IMForm differentiate_to_im(const ActionGroupoid& gpd, const MultForm& alpha, double epsilon = 1e-3);

/// check_im_form and S1-S3 of the extracted coupling, re-graded at `tol`.
Report lie_functor_report(const ActionGroupoid& gpd, const MultForm& alpha,
                          const SamplePlan& plan = {}, double tol = 1e-6);

/// Fixture: SO(2) acting trivially on R, k = g, l = 1.
struct GroupoidFixture {
  ActionGroupoid gpd;
  ExprMatrix splitting;  ///< k x d
};

GroupoidFixture so2_trivial_fixture();
/// Rotations on the radial chart, k_x = R x, l = x^T / |x|^2.
GroupoidFixture so3_radial_fixture();

}  // namespace imtk
