#pragma once

#include <string_view>
#include <vector>

#include "steerml/qstate.hpp"

namespace steerml {

enum class FeatureKind { F1, F2, F3, F4 };

std::string_view to_string(FeatureKind k);
FeatureKind parse_feature_kind(std::string_view name);
// 15, 9, 9, 6.
int feature_length(FeatureKind k);

struct FeatureVector {
    FeatureKind kind = FeatureKind::F1;
    std::vector<double> values;
};

// Which local filter on Bob defines the canonical form.
//   sqrt:         (I x rho_B^{1/2}) rho (I x rho_B^{1/2})
//   inverse_sqrt: (I x rho_B^{-1/2}) rho (I x rho_B^{-1/2}), pseudo-inverse on
//                 singular marginals; yields rho_B = I/2 when rho_B is full rank.
enum class CanonicalVariant { sqrt, inverse_sqrt };

// rho_11, rho_22, rho_33, then (Re, Im) of the strictly lower triangle in
// row-major order: (1,0) (2,0) (2,1) (3,0) (3,1) (3,2), zero-based indices.
FeatureVector extract_F1(const TwoQubitState& rho);
// Inverse of extract_F1 (rho_44 from unit trace).
Mat4 matrix_from_F1(const FeatureVector& f);

// tau_kl = Tr[(sigma_k x sigma_l) rho], row-major over k, l in {x, y, z}.
FeatureVector extract_F2(const TwoQubitState& rho);

// Local filter on Bob followed by renormalization to unit trace.
TwoQubitState canonical_form(const TwoQubitState& rho, CanonicalVariant variant = CanonicalVariant::inverse_sqrt);

FeatureVector extract_F3(const TwoQubitState& rho, CanonicalVariant variant = CanonicalVariant::inverse_sqrt);

// F3 without the (y,x), (z,x), (z,y) entries: xx, xy, xz, yy, yz, zz.
FeatureVector extract_F4(const TwoQubitState& rho, CanonicalVariant variant = CanonicalVariant::inverse_sqrt);
// Index projection F3 -> F4.
FeatureVector project_F3_to_F4(const FeatureVector& f3);

FeatureVector extract_features(FeatureKind kind, const TwoQubitState& rho,
                               CanonicalVariant variant = CanonicalVariant::inverse_sqrt);

} // namespace steerml
