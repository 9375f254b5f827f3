// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "imtk/im_forms.hpp"

namespace imtk {

/// Coupling data (nabla^L, U) of B with a Lie algebra bundle k.
struct CouplingData {
  LieAlgebroid base;        ///< B
  FiberBracket kbracket;    ///< bracket on k
  LinearConnection nabla;   ///< nabla^L on k
  std::vector<Expr> u;      ///< U^c_{a i}, index (a * dim + i) * k + c

  CouplingData() = default;
  /// U = 0.
  CouplingData(LieAlgebroid b, FiberBracket br, LinearConnection conn);

  int k() const { return kbracket.rank(); }
  int base_rank() const { return base.rank(); }
  int dim() const { return base.dim(); }
  const Chart& chart() const { return base.chart(); }

  Expr& U(int a, int i, int c) { return u[index(a, i, c)]; }
  const Expr& U(int a, int i, int c) const { return u[index(a, i, c)]; }
  /// U(alpha, X) for a section of B and a vector field.
  Section u_value(const Section& alpha, const VectorField& x) const;
  /// U(b_a) as a k-valued 1-form.
  CoeffForm u_form(int a) const;

 private:
  std::size_t index(int a, int i, int c) const {
    return static_cast<std::size_t>((a * dim() + i) * k() + c);
  }
};

enum class StructureVariant { S1S3, S1pS3p };

/// Frame change (Q, Q^-1) that moves B onto ker l; l is the connection form's symbol.
std::pair<ExprMatrix, ExprMatrix> splitting_frame(const IMForm& form);

/// Reads (nabla^L, U) off an IM connection 1-form whose symbol is the identity on the ideal.
CouplingData extract_coupling(const LieAlgebroid& a, const IdealBundle& ideal, const IMForm& form,
                              const SamplePlan& plan = {});

/// B + k with the bracket built from the coupling; k comes first in the frame.
LieAlgebroid build_semidirect(const CouplingData& cd);

/// l = pr_k, i_X L(alpha, xi) = nabla_X xi - U(alpha, X) on build_semidirect(cd).
IMForm coupling_to_im(const CouplingData& cd, const SamplePlan& plan = {});

Report check_structure_equations(const CouplingData& cd, StructureVariant variant = StructureVariant::S1S3,
                                 const SamplePlan& plan = {});

/// max |U(a, rho b) + U(b, rho a)| over frame pairs.
double u_skew_residual(const CouplingData& cd, const SamplePlan& plan = {});

/// (d U, U) as a k-valued IM 2-form on B.
IMForm u_two_form(const CouplingData& cd);

/// (R . xi - d U(alpha), -U(alpha)) on build_semidirect(cd).
IMForm curvature_im(const CouplingData& cd, const SamplePlan& plan = {});

struct FlatnessClass {
  bool totally_flat = false;
  bool leafwise_flat = false;
  bool kernel_flat = false;
  Report report;
  std::vector<std::string> names() const;
};

FlatnessClass classify_flatness(const CouplingData& cd, const SamplePlan& plan = {});

/// Largest sampled distance between the fields of two couplings of the same shape.
double coupling_difference(const CouplingData& x, const CouplingData& y, const SamplePlan& plan = {});

/// Largest sampled distance between anchors and structure functions of two algebroids of the same rank.
double algebroid_difference(const LieAlgebroid& x, const LieAlgebroid& y, const SamplePlan& plan = {});

/// Largest sampled distance between frame values of two IM forms of the same shape.
double im_form_difference(const IMForm& x, const IMForm& y, const SamplePlan& plan = {});

}  // namespace imtk
