// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "imtk/algebroid.hpp"

namespace imtk {

/// V-valued IM form of degree d on an algebroid A.
///
/// Stored on the frame: symbol(a) = l(e_a), a (d-1)-form, and op(a) = L(e_a),
/// a d-form. On other sections L(f e_a) = f L(e_a) + df ^ l(e_a).
class IMForm {
 public:
  IMForm() = default;
  IMForm(LieAlgebroid a, int value_rank, int degree, std::vector<CoeffForm> symbol,
         std::vector<CoeffForm> op);

  /// Degree 1 with symbol matrix l (value_rank x rank).
  static IMForm one_form(const LieAlgebroid& a, const ExprMatrix& l, std::vector<CoeffForm> lfr);
  static IMForm zero(const LieAlgebroid& a, int value_rank, int degree);

  const LieAlgebroid& algebroid() const { return a_; }
  int value_rank() const { return value_rank_; }
  int degree() const { return degree_; }
  const CoeffForm& symbol(int a) const { return l_[static_cast<std::size_t>(a)]; }
  const CoeffForm& op(int a) const { return op_[static_cast<std::size_t>(a)]; }

  CoeffForm L(const Section& alpha) const;
  CoeffForm l(const Section& alpha) const;
  /// The symbol as a matrix; degree 1 only.
  ExprMatrix symbol_matrix() const;

  /// The same form read in the frame f_a = sum_b P_ba e_b.
  IMForm change_frame(const ExprMatrix& p, const ExprMatrix& p_inv) const;

  /// Adds `w` to L(e_a) and leaves the symbol alone.
  IMForm perturbed(int a, const CoeffForm& w) const;

 private:
  LieAlgebroid a_;
  int value_rank_ = 0;
  int degree_ = 0;
  std::vector<CoeffForm> l_;
  std::vector<CoeffForm> op_;
};

using IMOneForm = IMForm;
using IMTwoForm = IMForm;

IMForm operator+(const IMForm& x, const IMForm& y);
IMForm operator-(const IMForm& x, const IMForm& y);

/// l restricted to the first value_rank frame elements is the identity.
bool is_connection_form(const IMForm& form, const SamplePlan& plan = {});

/// The three IM conditions against rep, plus the connection predicate flag.
Report check_im_form(const IMForm& form, const ARepresentation& rep, const SamplePlan& plan = {});

/// Representation nabla_alpha = conn_{rho(alpha)} of A on the bundle of conn.
ARepresentation induced_representation(const LieAlgebroid& a, const LinearConnection& conn);

/// (L, l) -> (d L, L - d l); refused unless conn is A-invariant for rep.
IMForm d_im(const LinearConnection& conn, const ARepresentation& rep, const IMForm& form,
            const SamplePlan& plan = {});

/// V-valued algebroid cochain, stored on increasing tuples of frame indices.
struct AlgebroidCochain {
  int rank = 0;
  int value_rank = 0;
  int degree = 0;
  std::vector<Section> values;

  AlgebroidCochain() = default;
  AlgebroidCochain(int rank, int value_rank, int degree);

  /// Value on frame indices in any order.
  Section frame_value(std::span<const int> idx) const;
  /// Multilinear extension to arbitrary sections.
  Section value(const std::vector<Section>& alphas) const;
};

/// omega(a_1, ..., a_k) = l(a_1)(rho a_2, ..., rho a_k)
AlgebroidCochain chain_map(const IMForm& form);

/// Differential of the algebroid complex with coefficients in rep.
AlgebroidCochain cochain_differential(const AlgebroidCochain& w, const ARepresentation& rep);

/// Largest residual between two cochains over the samples.
double cochain_difference(const Chart& chart, const AlgebroidCochain& x, const AlgebroidCochain& y,
                          const SamplePlan& plan = {});

/// Evaluates a form on vector fields slot by slot.
Section contract(const CoeffForm& w, const std::vector<VectorField>& xs);

/// Orthonormal basis of the center of the fiber bracket at a point.
Eigen::MatrixXd center_basis(const FiberBracket& br, std::span<const double> point,
                             double threshold = 1e-9);

/// Center dimension over the samples; DegeneracyError if it varies.
int center_rank(const FiberBracket& br, const Chart& chart, const SamplePlan& plan = {});

/// max over samples of the distance of the given sections from the center.
double center_residual(const FiberBracket& br, const Chart& chart, std::span<const Section> sections,
                       const SamplePlan& plan = {});

}  // namespace imtk
