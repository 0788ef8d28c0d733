#include "steerml/qstate.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "steerml/errors.hpp"

namespace steerml {

namespace {

const std::array<Mat2, 4> kPauli = [] {
    const Complex i(0.0, 1.0);
    std::array<Mat2, 4> p;
    p[0] << 1, 0, 0, 1;
    p[1] << 0, 1, 1, 0;
    p[2] << 0, -i, i, 0;
    p[3] << 1, 0, 0, -1;
    return p;
}();

template <class M>
M sqrt_psd_impl(const M& h) {
    if (!is_hermitian(h)) throw ValidationError("matrix_sqrt_psd: input is not Hermitian");
    const M sym = (h + h.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<M> eig(sym);
    auto vals = eig.eigenvalues();
    if (vals.minCoeff() < -kStateTol) {
        throw ValidationError("matrix_sqrt_psd: input has a negative eigenvalue");
    }
    for (Eigen::Index k = 0; k < vals.size(); ++k) vals(k) = std::sqrt(std::max(vals(k), 0.0));
    const auto& vecs = eig.eigenvectors();
    M out = vecs * vals.template cast<Complex>().asDiagonal() * vecs.adjoint();
    return (out + out.adjoint()) / 2.0;
}

} // namespace

const Mat2& pauli(int k) { return kPauli.at(static_cast<std::size_t>(k)); }

Mat4 kron(const Mat2& a, const Mat2& b) {
    Mat4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

TwoQubitState TwoQubitState::from_matrix(const Mat4& m, double tol) {
    if (!m.allFinite()) throw ValidationError("state has non-finite entries");
    if (!is_hermitian(m)) throw ValidationError("state is not Hermitian");
    const Mat4 sym = (m + m.adjoint()) / 2.0;
    const double tr = sym.trace().real();
    if (std::abs(tr - 1.0) > tol) {
        std::ostringstream msg;
        msg << "state trace " << tr << " differs from 1";
        throw ValidationError(msg.str());
    }
    Eigen::SelfAdjointEigenSolver<Mat4> eig(sym, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -tol) throw ValidationError("state is not positive semidefinite");
    return TwoQubitState(sym);
}

std::array<double, 32> TwoQubitState::serialize() const {
    std::array<double, 32> out{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            out[static_cast<std::size_t>(8 * i + 2 * j)] = rho_(i, j).real();
            out[static_cast<std::size_t>(8 * i + 2 * j + 1)] = rho_(i, j).imag();
        }
    return out;
}

TwoQubitState TwoQubitState::deserialize(std::span<const double> values) {
    if (values.size() != 32) throw ValidationError("state serialization needs exactly 32 reals");
    Mat4 m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            m(i, j) = Complex(values[static_cast<std::size_t>(8 * i + 2 * j)],
                              values[static_cast<std::size_t>(8 * i + 2 * j + 1)]);
    return from_matrix(m);
}

Mat4 PauliDecomposition::reconstruct() const {
    Mat4 out = Mat4::Identity();
    for (int i = 0; i < 3; ++i) {
        out += r(i) * kron(pauli(i + 1), pauli(0));
        out += s(i) * kron(pauli(0), pauli(i + 1));
        for (int j = 0; j < 3; ++j) out += tau(i, j) * kron(pauli(i + 1), pauli(j + 1));
    }
    return out / 4.0;
}

TwoQubitState state_from_ginibre(const Eigen::Matrix4d& m, const Eigen::Matrix4d& n) {
    Mat4 g;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = Complex(m(i, j), n(i, j));
    Mat4 h = g * g.adjoint();
    h = (h + h.adjoint()) / 2.0;
    const double tr = h.trace().real();
    if (!(tr > 0.0)) throw ValidationError("Ginibre matrix is zero");
    return TwoQubitState::from_matrix(h / tr);
}

TwoQubitState random_two_qubit_state(RandomStream& rng) {
    for (;;) {
        Eigen::Matrix4d m, n;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) m(i, j) = rng.normal();
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) n(i, j) = rng.normal();
        if (m.squaredNorm() + n.squaredNorm() > 0.0) return state_from_ginibre(m, n);
    }
}

TwoQubitState generalized_werner(double p, double xi) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("generalized_werner: p must lie in [0, 1]");
    if (!(xi > 0.0 && xi < std::numbers::pi / 2)) {
        throw ValidationError("generalized_werner: xi must lie in (0, pi/2)");
    }
    Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
    psi(0) = std::cos(xi);
    psi(3) = std::sin(xi);
    Mat2 rho_a = Mat2::Zero();
    rho_a(0, 0) = std::cos(xi) * std::cos(xi);
    rho_a(1, 1) = std::sin(xi) * std::sin(xi);
    const Mat4 rho = p * (psi * psi.adjoint()) + (1.0 - p) * kron(rho_a, Mat2::Identity() / 2.0);
    return TwoQubitState::from_matrix(rho);
}

bool unsteerable_bound_holds(double p, double xi) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("unsteerable_bound_holds: p must lie in [0, 1]");
    if (!(xi > 0.0 && xi <= std::numbers::pi / 4 + 1e-15)) {
        throw ValidationError("unsteerable_bound_holds: xi must lie in (0, pi/4]");
    }
    if (p == 0.0) return true;
    const double c = std::cos(2.0 * xi);
    return c * c >= (2.0 * p - 1.0) / ((2.0 - p) * p * p * p);
}

Mat2 partial_trace_A(const Mat4& rho) {
    return rho.block<2, 2>(0, 0) + rho.block<2, 2>(2, 2);
}

Mat2 partial_trace_A(const TwoQubitState& rho) { return partial_trace_A(rho.matrix()); }

Mat2 partial_trace_B(const TwoQubitState& rho) {
    const Mat4& m = rho.matrix();
    Mat2 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out(i, j) = m(2 * i, 2 * j) + m(2 * i + 1, 2 * j + 1);
    return out;
}

Mat2 matrix_sqrt_psd(const Mat2& h) { return sqrt_psd_impl(h); }
Mat4 matrix_sqrt_psd(const Mat4& h) { return sqrt_psd_impl(h); }

PauliDecomposition pauli_decompose(const TwoQubitState& rho) {
    const Mat4& m = rho.matrix();
    PauliDecomposition d;
    for (int i = 0; i < 3; ++i) {
        d.r(i) = (kron(pauli(i + 1), pauli(0)) * m).trace().real();
        d.s(i) = (kron(pauli(0), pauli(i + 1)) * m).trace().real();
        for (int j = 0; j < 3; ++j) d.tau(i, j) = (kron(pauli(i + 1), pauli(j + 1)) * m).trace().real();
    }
    return d;
}

} // namespace steerml
