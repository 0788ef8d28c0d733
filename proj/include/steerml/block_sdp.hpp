#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "steerml/qstate.hpp"

namespace steerml {

enum class SolverStatus { optimal, max_iterations, numerical_failure };

std::string_view to_string(SolverStatus s);

// Hermitian 2x2 matrices in Pauli coordinates: H = h0 I + h1 X + h2 Y + h3 Z.
Eigen::Vector4d pauli_coords(const Mat2& h);
Mat2 from_pauli_coords(const Eigen::Vector4d& c);

// Semidefinite program whose cone is a product of 2x2 Hermitian PSD blocks.
//
//   primal:  min  sum_k <C_k, X_k>   s.t.  sum_k <A_{k,j}, X_k> = b_j,  X_k >= 0
//   dual:    max  b.y                s.t.  Z_k = C_k - sum_j y_j A_{k,j} >= 0
//
// A_{k,j} is stored as the 4 x n matrix of Pauli coordinates of block k.
struct BlockSdp {
    std::vector<Mat2> c;
    std::vector<Eigen::Matrix<double, 4, Eigen::Dynamic>> a;
    Eigen::VectorXd b;

    int blocks() const { return static_cast<int>(c.size()); }
    int variables() const { return static_cast<int>(b.size()); }
};

struct IpmOptions {
    double gap_tol = 1e-9;
    double feas_tol = 1e-9;
    int max_iterations = 200;
    double step_fraction = 0.98;
    // Iterations without halving the best residual before giving up.
    int stall_iterations = 25;
    // When the tolerances are never met, the best iterate is still reported
    // as optimal if gap and infeasibilities are within this factor of them.
    double near_optimal_factor = 100.0;
    bool project_primal = true;
};

struct IpmResult {
    SolverStatus status = SolverStatus::numerical_failure;
    Eigen::VectorXd y;
    std::vector<Mat2> x;
    std::vector<Mat2> z;
    double primal_objective = 0.0;
    double dual_objective = 0.0;
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    // max(gap / gap_tol, infeasibilities / feas_tol) of the returned iterate.
    double residual_ratio = 0.0;
    int iterations = 0;
};

// Infeasible-start primal-dual path following (HKM direction) with Mehrotra
// predictor-corrector steps. If y0 is given and C - A^T y0 is positive
// definite the dual starts feasible at y0. x_scale sets X0 = x_scale * I.
IpmResult solve_block_sdp(const BlockSdp& problem, const IpmOptions& opts = {},
                          const std::optional<Eigen::VectorXd>& y0 = std::nullopt, double x_scale = 1.0);

} // namespace steerml
