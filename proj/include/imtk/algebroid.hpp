// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "imtk/bundle.hpp"
#include "imtk/report.hpp"

namespace imtk {

class IMForm;

/// Lie algebroid on the trivial bundle of rank r over a chart.
///
/// The bracket of frame sections is [e_a, e_b] = sum_c c_ab^c e_c; the
/// bracket of general sections follows from the Leibniz rule.
class LieAlgebroid {
 public:
  LieAlgebroid() = default;
  /// Abelian structure; fill in brackets with set_structure.
  LieAlgebroid(Chart chart, int rank, ExprMatrix anchor);

  /// Sets c_ab^c and c_ba^c = -c_ab^c.
  void set_structure(int a, int b, int c, const Expr& e);
  const Expr& structure(int a, int b, int c) const;

  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim; }
  int rank() const { return rank_; }
  const ExprMatrix& anchor() const { return anchor_; }

  VectorField anchor_of(const Section& s) const;
  Section bracket(const Section& x, const Section& y) const;
  /// [e_a, e_b] as a section.
  Section frame_bracket(int a, int b) const;

  /// The same algebroid in the frame f_a = sum_b P_ba e_b.
  LieAlgebroid change_frame(const ExprMatrix& p, const ExprMatrix& p_inv) const;

  /// Structure functions restricted to the first k frame elements.
  FiberBracket restricted_bracket(int k) const;

 private:
  Chart chart_;
  int rank_ = 0;
  ExprMatrix anchor_;
  std::vector<Expr> c_;
};

Section bracket(const LieAlgebroid& a, const Section& x, const Section& y);

/// The ideal spanned by e_1..e_k.
struct IdealBundle {
  LieAlgebroid parent;
  int k = 0;
  FiberBracket bracket;

  IdealBundle() = default;
  IdealBundle(LieAlgebroid a, int k);
  /// Embeds a section of the ideal into the parent.
  Section include(const Section& xi) const;
  /// First k components.
  Section truncate(const Section& s) const;
};

/// Flat A-connection on the trivial bundle V: nabla_{e_b} = rho(e_b) + M_b.
struct ARepresentation {
  LieAlgebroid algebroid;
  int rank = 0;                    ///< rank of V
  std::vector<ExprMatrix> coeffs;  ///< M_b, rank x rank, one per frame index of A

  Section act(const Section& alpha, const Section& s) const;
  CoeffForm act(const Section& alpha, const CoeffForm& w) const;  ///< componentwise
  /// max |nabla_[a,b] - [nabla_a, nabla_b]| on random sections
  double flatness_residual(const SamplePlan& plan) const;
};

/// Jacobi identity, anchor morphism, and (if given) the ideal clauses.
Report check_axioms(const LieAlgebroid& a, const IdealBundle* ideal, const SamplePlan& plan);

/// nabla_alpha gamma = [alpha, gamma] on the ideal; refused if the ideal clauses fail.
ARepresentation canonical_representation(const LieAlgebroid& a, const IdealBundle& ideal,
                                         const SamplePlan& plan = {});

/// Classical Lie derivative of a bundle-valued form along a vector field (componentwise).
CoeffForm lie_derivative_vf(const VectorField& x, const CoeffForm& w);

/// L_alpha gamma for a form with values in a representation.
CoeffForm lie_derivative_form(const Section& alpha, const ARepresentation& rep, const CoeffForm& w);

/// nabla^A_a = nabla_{rho(a)} and R(rho(a), v) = 0.
Report check_A_invariant(const LinearConnection& conn, const ARepresentation& rep,
                         const SamplePlan& plan = {});

/// Basic curvature of a connection on the bundle underlying A, on frames.
class BasicCurvature {
 public:
  BasicCurvature(const LieAlgebroid& a, const LinearConnection& conn);

  /// R(e_a, e_b)(d_i) as a section.
  const Section& frame_value(int a, int b, int i) const;
  /// Symbolic value on general sections and a vector field.
  Section value(const Section& alpha, const Section& beta, const VectorField& x) const;
  /// Numeric trilinear evaluation at a point.
  std::vector<double> evaluate(std::span<const double> alpha, std::span<const double> beta,
                               std::span<const double> x, std::span<const double> point) const;
  double max_abs(const SamplePlan& plan) const;
  const std::vector<Section>& all() const { return r_; }

 private:
  LieAlgebroid a_;
  LinearConnection conn_;
  std::vector<Section> r_;  // index (a * r + b) * n + i
};

/// Direct evaluation of the five-term basic curvature on arbitrary sections.
Section basic_curvature_value(const LieAlgebroid& a, const LinearConnection& conn,
                              const Section& alpha, const Section& beta, const VectorField& x);

/// A-connection on A induced by conn: bar-nabla_alpha beta = nabla_{rho(beta)} alpha + [alpha, beta].
Section basic_connection_on_a(const LieAlgebroid& a, const LinearConnection& conn,
                              const Section& alpha, const Section& beta);
/// A-connection on TM induced by conn: bar-nabla_alpha X = rho(nabla_X alpha) + [rho(alpha), X].
VectorField basic_connection_on_tm(const LieAlgebroid& a, const LinearConnection& conn,
                                   const Section& alpha, const VectorField& x);

/// i_X L(alpha) = l(nabla_X alpha); refused unless bar-nabla l = 0 and l(R_bas) = 0.
IMForm cartan_build_connection(const LieAlgebroid& a, const IdealBundle& ideal,
                               const ExprMatrix& l, const LinearConnection& conn,
                               const SamplePlan& plan = {});

/// Residuals of the Cartan preconditions (does not throw).
Report cartan_preconditions(const LieAlgebroid& a, const IdealBundle& ideal, const ExprMatrix& l,
                            const LinearConnection& conn, const SamplePlan& plan = {});

}  // namespace imtk
