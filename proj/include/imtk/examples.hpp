// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "imtk/coupling.hpp"

namespace imtk {

// Building blocks.
FiberBracket so3_bracket();
/// Constant structure constants from (a, b, c, value) entries with a < b.
FiberBracket constant_bracket(int rank, const std::vector<std::tuple<int, int, int, double>>& entries);
LieAlgebroid tangent_algebroid(const Chart& chart);
/// Algebroid with zero anchor and the given fiber bracket.
LieAlgebroid bundle_of_algebras(const Chart& chart, const FiberBracket& br);
/// g x M with anchor columns `fields` (n x dim g), assumed to be a Lie algebra morphism.
LieAlgebroid action_algebroid(const Chart& chart, const FiberBracket& g, const ExprMatrix& fields);
/// rho(e_a)(x) = x cross e_a on R^3
ExprMatrix rotation_fields();

struct ProductParams {
  LieAlgebroid base;
  FiberBracket algebra;
};

/// Lie algebra bundle split as k + complement; the frame must already carry a direct-product bracket.
struct LieAlgebraBundleParams {
  Chart chart;
  FiberBracket algebra;          ///< full fiber bracket, ideal first
  int k = 0;
  LinearConnection connection;   ///< on the ideal; must preserve its bracket
};

/// Adjoint-type action algebroid with an ideal spanned by the first k elements of `frame`.
struct ActionParams {
  Chart chart;
  FiberBracket algebra;
  ExprMatrix fields;
  ExprMatrix frame;          ///< empty means the constant frame
  int k = 0;
  ExprMatrix splitting;      ///< k x r, in the adapted frame
};

/// Fiber product (TM + k) x_TM B built from (nabla, Omega).
struct PrincipalParams {
  LieAlgebroid base;
  FiberBracket algebra;
  LinearConnection connection;
  CoeffForm omega;  ///< k-valued 2-form
};

/// Rank-one ideal: B + R with [b_a, e] = V_a e and [b_a, b_b] = [b_a, b_b]_B + lambda_ab e.
struct RankOneParams {
  LieAlgebroid base;
  std::vector<Expr> v;       ///< one per B-frame index
  std::vector<Expr> lambda;  ///< on increasing pairs of B-frame indices
};

using ExampleParams =
    std::variant<ProductParams, LieAlgebraBundleParams, ActionParams, PrincipalParams, RankOneParams>;

/// name is one of product, lie_algebra_bundle, transitive, action, principal_type,
/// principal_type_flat, rank_one. transitive and principal_type* take PrincipalParams;
/// transitive additionally requires the base to be the tangent algebroid.
struct ExampleSpec {
  std::string name;
  ExampleParams params;
};

struct Model {
  std::string family;
  LieAlgebroid algebroid;
  std::optional<IdealBundle> ideal;
  std::optional<CouplingData> coupling;
  std::optional<IMForm> form;                ///< IM connection 1-form valued in the ideal
  std::optional<LinearConnection> connection;  ///< connection on A used to build `form`, if any
  std::optional<ExprMatrix> splitting;
};

/// Validates the parameters of the family and builds the model.
///
/// Throws PreconditionError naming the failed condition, or std::invalid_argument
/// for a family/parameter mismatch.
Model make_example(const ExampleSpec& spec, const SamplePlan& plan = {});

/// i_X L(alpha) = l([tau X, alpha]) with l = the projection along tau.
///
/// tau is r x n. The isotropy must be spanned by the first r - n frame elements.
IMForm transitive_im_connection(const LieAlgebroid& a, const ExprMatrix& tau, const SamplePlan& plan = {});

// Ready-made parameter sets used by the shipped fixtures and tests.
ExampleSpec product_so3_example();                ///< TM on R^2 times so(3)
ActionParams so3_radial_action();                 ///< rotations of R^3 minus 0, ideal R x
ExampleSpec principal_flat_example();             ///< R^2, abelian rank 1, Omega = dx1 ^ dx2
ExampleSpec principal_so3_example();              ///< so(3), nabla = d + ad theta, Omega its curvature

}  // namespace imtk
