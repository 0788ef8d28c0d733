#pragma once

#include <array>
#include <complex>
#include <span>

#include <Eigen/Dense>

#include "steerml/rng.hpp"

namespace steerml {

using Complex = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kStateTol = 1e-10;

// Pauli basis {I, X, Y, Z}; index 0 is the identity.
const Mat2& pauli(int k);

template <class Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, double tol = kHermitianTol) {
    return (m - m.adjoint()).norm() <= tol;
}

// 4x4 density matrix of two qubits, A (high bit) tensor B (low bit).
// Always Hermitian, unit trace and PSD up to kStateTol.
class TwoQubitState {
public:
    // Validates; throws ValidationError if the matrix is not a state.
    static TwoQubitState from_matrix(const Mat4& m, double tol = kStateTol);

    const Mat4& matrix() const { return rho_; }

    // 32 reals, row-major, alternating real and imaginary parts.
    std::array<double, 32> serialize() const;
    static TwoQubitState deserialize(std::span<const double> values);

private:
    explicit TwoQubitState(const Mat4& m) : rho_(m) {}
    Mat4 rho_;
};

struct PauliDecomposition {
    Eigen::Vector3d r = Eigen::Vector3d::Zero();   // Alice Bloch vector
    Eigen::Vector3d s = Eigen::Vector3d::Zero();   // Bob Bloch vector
    Eigen::Matrix3d tau = Eigen::Matrix3d::Zero(); // correlations, tau(k, l) = <sigma_k x sigma_l>

    Mat4 reconstruct() const;
};

// rho = H / Tr H with H = (M + iN)(M + iN)^dagger and M, N standard normal.
TwoQubitState random_two_qubit_state(RandomStream& rng);
// Same construction from explicit M and N.
TwoQubitState state_from_ginibre(const Eigen::Matrix4d& m, const Eigen::Matrix4d& n);

// p |psi><psi| + (1 - p) rho_A x I/2 with |psi> = cos(xi)|00> + sin(xi)|11>.
TwoQubitState generalized_werner(double p, double xi);

// True when cos^2(2 xi) >= (2p - 1) / ((2 - p) p^3), i.e. no projective
// measurement of Alice steers Bob. p = 0 (product state) returns true.
bool unsteerable_bound_holds(double p, double xi);

Mat2 partial_trace_A(const TwoQubitState& rho);
Mat2 partial_trace_B(const TwoQubitState& rho);
Mat2 partial_trace_A(const Mat4& rho);

// PSD square root by Hermitian eigendecomposition. Eigenvalues down to
// -kStateTol are clipped to zero; anything more negative is rejected.
Mat2 matrix_sqrt_psd(const Mat2& h);
Mat4 matrix_sqrt_psd(const Mat4& h);

PauliDecomposition pauli_decompose(const TwoQubitState& rho);

Mat4 kron(const Mat2& a, const Mat2& b);

} // namespace steerml
