#include "steerml/features.hpp"

#include <array>
#include <cmath>

#include "steerml/errors.hpp"

namespace steerml {

namespace {

constexpr std::array<std::pair<int, int>, 6> kLowerTriangle = {{{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};
constexpr std::array<int, 6> kF4Indices = {0, 1, 2, 4, 5, 8};

Mat2 inverse_sqrt_psd(const Mat2& h) {
    Eigen::SelfAdjointEigenSolver<Mat2> eig(h);
    Eigen::Vector2d vals = eig.eigenvalues();
    for (int k = 0; k < 2; ++k) vals(k) = vals(k) > kStateTol ? 1.0 / std::sqrt(vals(k)) : 0.0;
    const auto& vecs = eig.eigenvectors();
    return vecs * vals.cast<Complex>().asDiagonal() * vecs.adjoint();
}

} // namespace

std::string_view to_string(FeatureKind k) {
    switch (k) {
    case FeatureKind::F1: return "F1";
    case FeatureKind::F2: return "F2";
    case FeatureKind::F3: return "F3";
    case FeatureKind::F4: return "F4";
    }
    return "?";
}

FeatureKind parse_feature_kind(std::string_view name) {
    if (name == "F1") return FeatureKind::F1;
    if (name == "F2") return FeatureKind::F2;
    if (name == "F3") return FeatureKind::F3;
    if (name == "F4") return FeatureKind::F4;
    throw ValidationError("unknown feature kind: " + std::string(name));
}

int feature_length(FeatureKind k) {
    switch (k) {
    case FeatureKind::F1: return 15;
    case FeatureKind::F2: return 9;
    case FeatureKind::F3: return 9;
    case FeatureKind::F4: return 6;
    }
    return 0;
}

FeatureVector extract_F1(const TwoQubitState& rho) {
    const Mat4& m = rho.matrix();
    FeatureVector f{FeatureKind::F1, {}};
    f.values.reserve(15);
    for (int i = 0; i < 3; ++i) f.values.push_back(m(i, i).real());
    for (const auto& [i, j] : kLowerTriangle) {
        f.values.push_back(m(i, j).real());
        f.values.push_back(m(i, j).imag());
    }
    return f;
}

Mat4 matrix_from_F1(const FeatureVector& f) {
    if (f.kind != FeatureKind::F1 || f.values.size() != 15) throw ValidationError("matrix_from_F1: need an F1 vector");
    Mat4 m = Mat4::Zero();
    for (int i = 0; i < 3; ++i) m(i, i) = f.values[static_cast<std::size_t>(i)];
    m(3, 3) = 1.0 - f.values[0] - f.values[1] - f.values[2];
    std::size_t k = 3;
    for (const auto& [i, j] : kLowerTriangle) {
        m(i, j) = Complex(f.values[k], f.values[k + 1]);
        m(j, i) = std::conj(m(i, j));
        k += 2;
    }
    return m;
}

FeatureVector extract_F2(const TwoQubitState& rho) {
    const PauliDecomposition d = pauli_decompose(rho);
    FeatureVector f{FeatureKind::F2, {}};
    f.values.reserve(9);
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) f.values.push_back(d.tau(k, l));
    return f;
}

TwoQubitState canonical_form(const TwoQubitState& rho, CanonicalVariant variant) {
    const Mat2 rho_b = partial_trace_A(rho);
    const Mat2 filter = variant == CanonicalVariant::sqrt ? matrix_sqrt_psd(rho_b) : inverse_sqrt_psd(rho_b);
    const Mat4 op = kron(Mat2::Identity(), filter);
    Mat4 out = op * rho.matrix() * op.adjoint();
    out = (out + out.adjoint()) / 2.0;
    const double tr = out.trace().real();
    if (!(tr > 0.0)) throw NumericalError("canonical_form: filtered state has zero trace");
    return TwoQubitState::from_matrix(out / tr);
}

FeatureVector extract_F3(const TwoQubitState& rho, CanonicalVariant variant) {
    FeatureVector f = extract_F2(canonical_form(rho, variant));
    f.kind = FeatureKind::F3;
    return f;
}

FeatureVector project_F3_to_F4(const FeatureVector& f3) {
    if (f3.kind != FeatureKind::F3 || f3.values.size() != 9) throw ValidationError("project_F3_to_F4: need an F3 vector");
    FeatureVector f{FeatureKind::F4, {}};
    for (int idx : kF4Indices) f.values.push_back(f3.values[static_cast<std::size_t>(idx)]);
    return f;
}

FeatureVector extract_F4(const TwoQubitState& rho, CanonicalVariant variant) {
    return project_F3_to_F4(extract_F3(rho, variant));
}

FeatureVector extract_features(FeatureKind kind, const TwoQubitState& rho, CanonicalVariant variant) {
    switch (kind) {
    case FeatureKind::F1: return extract_F1(rho);
    case FeatureKind::F2: return extract_F2(rho);
    case FeatureKind::F3: return extract_F3(rho, variant);
    case FeatureKind::F4: return extract_F4(rho, variant);
    }
    throw ValidationError("unknown feature kind");
}

} // namespace steerml
