#include "steerml/block_sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "steerml/errors.hpp"

namespace steerml {

namespace {

using Mat4d = Eigen::Matrix4d;
using CoordMatrix = Eigen::Matrix<double, 4, Eigen::Dynamic>;

double inner(const Mat2& a, const Mat2& b) { return (a * b).trace().real(); }

Mat2 herm(const Mat2& m) { return (m + m.adjoint()) / 2.0; }

// Smallest eigenvalue of a 2x2 Hermitian matrix.
double min_eig(const Mat2& m) {
    const double a = m(0, 0).real();
    const double d = m(1, 1).real();
    const double half = 0.5 * (a - d);
    return 0.5 * (a + d) - std::sqrt(half * half + std::norm(m(0, 1)));
}

// Largest alpha with x + alpha * dx still PSD (x positive definite).
double max_step(const Mat2& x, const Mat2& dx) {
    Eigen::LLT<Mat2> llt(x);
    if (llt.info() != Eigen::Success) return 0.0;
    const Mat2 linv = llt.matrixL().solve(Mat2::Identity());
    const double lam = min_eig(herm(linv * dx * linv.adjoint()));
    return lam >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lam;
}

bool positive_definite(const Mat2& m) { return m(0, 0).real() > 0.0 && min_eig(m) > 0.0; }

// Re Tr(A_j G) for every j, summed over blocks.
Eigen::VectorXd apply_a(const BlockSdp& p, const std::vector<Mat2>& g) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(p.variables());
    for (int k = 0; k < p.blocks(); ++k) out.noalias() += p.a[static_cast<std::size_t>(k)].transpose() * (2.0 * pauli_coords(g[static_cast<std::size_t>(k)]));
    return out;
}

Mat2 apply_at(const BlockSdp& p, int k, const Eigen::VectorXd& y) {
    return from_pauli_coords(p.a[static_cast<std::size_t>(k)] * y);
}

double frob(const std::vector<Mat2>& ms) {
    double acc = 0.0;
    for (const auto& m : ms) acc += m.squaredNorm();
    return std::sqrt(acc);
}

struct Direction {
    Eigen::VectorXd dy;
    std::vector<Mat2> dx;
    std::vector<Mat2> dz;
};

} // namespace

std::string_view to_string(SolverStatus s) {
    switch (s) {
    case SolverStatus::optimal: return "optimal";
    case SolverStatus::max_iterations: return "max-iterations";
    case SolverStatus::numerical_failure: return "numerical-failure";
    }
    return "?";
}

Eigen::Vector4d pauli_coords(const Mat2& h) {
    Eigen::Vector4d c;
    for (int k = 0; k < 4; ++k) c(k) = 0.5 * (pauli(k) * h).trace().real();
    return c;
}

Mat2 from_pauli_coords(const Eigen::Vector4d& c) {
    return c(0) * pauli(0) + c(1) * pauli(1) + c(2) * pauli(2) + c(3) * pauli(3);
}

IpmResult solve_block_sdp(const BlockSdp& p, const IpmOptions& opts, const std::optional<Eigen::VectorXd>& y0,
                          double x_scale) {
    const int nblk = p.blocks();
    const int n = p.variables();
    if (nblk == 0 || n == 0 || static_cast<int>(p.a.size()) != nblk) throw ValidationError("malformed block SDP");
    for (const auto& a : p.a)
        if (a.cols() != n) throw ValidationError("malformed block SDP: coefficient width mismatch");
    const auto nb = static_cast<std::size_t>(nblk);

    IpmResult res;
    res.y = y0.value_or(Eigen::VectorXd::Zero(n));
    res.x.assign(nb, x_scale * Mat2::Identity());
    res.z.resize(nb);
    bool dual_feasible_start = y0.has_value();
    for (int k = 0; k < nblk; ++k) {
        res.z[static_cast<std::size_t>(k)] = herm(p.c[static_cast<std::size_t>(k)] - apply_at(p, k, res.y));
        if (!positive_definite(res.z[static_cast<std::size_t>(k)])) dual_feasible_start = false;
    }
    if (!dual_feasible_start) {
        double scale = 1.0;
        for (const auto& c : p.c) scale = std::max(scale, c.norm());
        res.z.assign(nb, scale * Mat2::Identity());
    }

    const double b_norm = p.b.norm();
    const double c_norm = frob(p.c);
    const double dim = 2.0 * nblk;

    // Least-squares projection of primal steps onto A dX = rp.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    for (const auto& a : p.a) gram.noalias() += 2.0 * a.transpose() * a;
    const Eigen::LLT<Eigen::MatrixXd> gram_llt(gram);
    const bool project = opts.project_primal && gram_llt.info() == Eigen::Success;

    std::vector<Mat2> zinv(nb), rd(nb);
    IpmResult best;
    best.residual_ratio = std::numeric_limits<double>::infinity();
    double progress_mark = best.residual_ratio;
    int since_progress = 0;
    auto finish = [&](SolverStatus fallback) {
        best.iterations = res.iterations;
        best.status = best.residual_ratio <= opts.near_optimal_factor ? SolverStatus::optimal : fallback;
        return best;
    };

    int stalled = 0;
    for (int it = 0; it <= opts.max_iterations; ++it) {
        res.iterations = it;
        const Eigen::VectorXd rp = p.b - apply_a(p, res.x);
        double xz = 0.0;
        res.primal_objective = 0.0;
        for (int k = 0; k < nblk; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            rd[kk] = herm(p.c[kk] - res.z[kk] - apply_at(p, k, res.y));
            xz += inner(res.x[kk], res.z[kk]);
            res.primal_objective += inner(p.c[kk], res.x[kk]);
        }
        res.dual_objective = p.b.dot(res.y);
        res.primal_infeasibility = rp.norm() / (1.0 + b_norm);
        res.dual_infeasibility = frob(rd) / (1.0 + c_norm);
        if (!std::isfinite(xz) || !std::isfinite(res.primal_objective) || !std::isfinite(res.dual_objective))
            return finish(SolverStatus::numerical_failure);
        const double scale = 1.0 + std::abs(res.primal_objective) + std::abs(res.dual_objective);
        const double gap = std::max(std::abs(res.primal_objective - res.dual_objective), xz) / scale;
        res.residual_ratio = std::max({gap / opts.gap_tol, res.primal_infeasibility / opts.feas_tol,
                                       res.dual_infeasibility / opts.feas_tol});
        if (res.residual_ratio <= 1.0) {
            res.status = SolverStatus::optimal;
            return res;
        }
        if (res.residual_ratio < best.residual_ratio) best = res;
        if (best.residual_ratio < 0.5 * progress_mark) {
            progress_mark = best.residual_ratio;
            since_progress = 0;
        } else if (++since_progress >= opts.stall_iterations) {
            return finish(SolverStatus::max_iterations);
        }
        if (it == opts.max_iterations) break;

        const double mu = xz / dim;

        // Schur complement M_ij = sum_k Re Tr(A_i X A_j Z^-1).
        Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(n, n);
        for (int k = 0; k < nblk; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            zinv[kk] = herm(res.z[kk].inverse());
            Mat4d w;
            for (int a = 0; a < 4; ++a) {
                const Mat2 left = pauli(a) * res.x[kk];
                for (int b = 0; b < 4; ++b) w(a, b) = (left * pauli(b) * zinv[kk]).trace().real();
            }
            w = 0.5 * (w + w.transpose()).eval();
            const auto& ak = p.a[kk];
            schur.noalias() += ak.transpose() * (w * ak);
        }
        schur = 0.5 * (schur + schur.transpose()).eval();
        Eigen::LLT<Eigen::MatrixXd> llt(schur);
        // Shifted retries, then LDLT.
        for (double shift = 1e-14; llt.info() != Eigen::Success && shift <= 1e-8; shift *= 100.0) {
            const double diag = schur.diagonal().cwiseAbs().maxCoeff();
            llt.compute(schur + shift * diag * Eigen::MatrixXd::Identity(n, n));
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt;
        const bool use_llt = llt.info() == Eigen::Success;
        if (!use_llt) {
            ldlt.compute(schur);
            if (ldlt.info() != Eigen::Success) return finish(SolverStatus::numerical_failure);
        }

        // Newton direction for the complementarity target X Z -> rc.
        auto solve_direction = [&](const std::vector<Mat2>& rc) {
            Direction d;
            std::vector<Mat2> g(nb);
            for (std::size_t k = 0; k < nb; ++k) g[k] = (rc[k] - res.x[k] * rd[k]) * zinv[k];
            const Eigen::VectorXd rhs = rp - apply_a(p, g);
            auto schur_solve = [&](const Eigen::VectorXd& v) {
                return use_llt ? Eigen::VectorXd(llt.solve(v)) : Eigen::VectorXd(ldlt.solve(v));
            };
            d.dy = schur_solve(rhs);
            for (int refine = 0; refine < 2; ++refine) d.dy += schur_solve(rhs - schur * d.dy);
            d.dx.resize(nb);
            d.dz.resize(nb);
            for (int k = 0; k < nblk; ++k) {
                const auto kk = static_cast<std::size_t>(k);
                d.dz[kk] = herm(rd[kk] - apply_at(p, k, d.dy));
                d.dx[kk] = herm((rc[kk] - res.x[kk] * d.dz[kk]) * zinv[kk]);
            }
            if (project) {
                const Eigen::VectorXd w = gram_llt.solve(rp - apply_a(p, d.dx));
                for (int k = 0; k < nblk; ++k) d.dx[static_cast<std::size_t>(k)] += apply_at(p, k, w);
            }
            return d;
        };
        auto step_lengths = [&](const Direction& d) {
            double ap = std::numeric_limits<double>::infinity();
            double ad = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < nb; ++k) {
                ap = std::min(ap, max_step(res.x[k], d.dx[k]));
                ad = std::min(ad, max_step(res.z[k], d.dz[k]));
            }
            return std::pair<double, double>{ap, ad};
        };

        std::vector<Mat2> rc(nb);
        for (std::size_t k = 0; k < nb; ++k) rc[k] = -res.x[k] * res.z[k];
        const Direction pred = solve_direction(rc);
        auto [ap_max, ad_max] = step_lengths(pred);
        const double ap_aff = std::min(1.0, ap_max);
        const double ad_aff = std::min(1.0, ad_max);
        double xz_aff = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
            xz_aff += inner(res.x[k] + ap_aff * pred.dx[k], res.z[k] + ad_aff * pred.dz[k]);
        }
        const double ratio = std::clamp(xz_aff / xz, 0.0, 1.0);
        const double sigma = ratio * ratio * ratio;

        for (std::size_t k = 0; k < nb; ++k) {
            rc[k] = sigma * mu * Mat2::Identity() - res.x[k] * res.z[k] - pred.dx[k] * pred.dz[k];
        }
        const Direction corr = solve_direction(rc);
        std::tie(ap_max, ad_max) = step_lengths(corr);
        const double ap = std::min(1.0, opts.step_fraction * ap_max);
        const double ad = std::min(1.0, opts.step_fraction * ad_max);
        if (!corr.dy.allFinite() || !std::isfinite(ap) || !std::isfinite(ad))
            return finish(SolverStatus::numerical_failure);
        stalled = (ap < 1e-10 && ad < 1e-10) ? stalled + 1 : 0;
        if (stalled >= 5) return finish(SolverStatus::numerical_failure);
        for (std::size_t k = 0; k < nb; ++k) {
            res.x[k] = herm(res.x[k] + ap * corr.dx[k]);
            res.z[k] = herm(res.z[k] + ad * corr.dz[k]);
        }
        res.y += ad * corr.dy;
    }
    return finish(SolverStatus::max_iterations);
}

} // namespace steerml
