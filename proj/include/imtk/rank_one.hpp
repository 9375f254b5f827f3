// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "imtk/coupling.hpp"

namespace imtk {

/// Trivialized description of a rank-one bundle of ideals over B.
///
/// V and lambda are B-cochains on the frame of B; lambda is stored on
/// increasing pairs. theta and u1 are present only when the data comes from
/// a coupling.
struct RankOneData {
  LieAlgebroid base;
  std::vector<Expr> v;
  std::vector<Expr> lambda;
  std::optional<CoeffForm> theta;
  std::vector<CoeffForm> u1;

  Expr lambda_at(int a, int b) const;
  bool has_coupling() const { return theta.has_value(); }
};

/// theta from nabla^L, V = rho_B^* theta, lambda(a, b) = U(a, rho_B b).
RankOneData extract_rank_one(const CouplingData& cd);

/// Reads V and lambda off an algebroid whose first frame element spans the ideal.
RankOneData rank_one_cochains(const LieAlgebroid& a);

/// (S2''), (S3'') when a coupling is present, and tangentiality of V and lambda.
///
/// Tangentiality is checked for the supplied representatives only.
Report check_rank_one(const RankOneData& data, const SamplePlan& plan = {});

/// Change of trivialization e' = h e.
RankOneData gauge_transform(const RankOneData& data, const Expr& h);

enum class WitnessKind { product, totally_flat, leafwise_flat, kernel_flat, principal_type };

WitnessKind parse_witness_kind(const std::string& name);
std::string to_string(WitnessKind kind);

/// Witnesses are read in the trivialization obtained after applying h.
struct RankOneWitness {
  std::optional<Expr> h;                 ///< default 1
  std::optional<std::vector<Expr>> z;     ///< change of splitting, one entry per B-frame index
  std::optional<CoeffForm> theta;        ///< 1-form on M
  std::optional<IMForm> im;              ///< IM 2-form on B, scalar values
  std::optional<CoeffForm> omega;        ///< scalar 2-form on M
};

/// Every kind checks lambda' + d_B Z - target = 0 under the name "c2", with
/// target 0, the chain-map image of the IM form, or rho_B^* Omega.
///
/// Throws std::invalid_argument naming a missing witness.
Report verify_witness(const RankOneData& data, WitnessKind kind, const RankOneWitness& w,
                      const SamplePlan& plan = {});

/// (d_B Z)(a, b) with coefficients twisted by V, on increasing pairs.
std::vector<Expr> twisted_differential(const LieAlgebroid& b, const std::vector<Expr>& v,
                                       const std::vector<Expr>& z);

}  // namespace imtk
