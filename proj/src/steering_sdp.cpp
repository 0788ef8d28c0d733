#include "steerml/steering_sdp.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "steerml/errors.hpp"

namespace steerml {

namespace {

using CoordMatrix = Eigen::Matrix<double, 4, Eigen::Dynamic>;

void require_no_signalling(const Assemblage& asm_) {
    if (asm_.signalling_defect() > 1e-8) throw ValidationError("assemblage is signalling");
    const double tr = asm_.bob_marginal().trace().real();
    if (std::abs(tr - 1.0) > 1e-8) throw ValidationError("assemblage is not normalized");
}

} // namespace

std::vector<DeterministicStrategy> enumerate_strategies(int m) {
    if (m < 2 || m > kMaxStrategySettings) throw ValidationError("enumerate_strategies: m must lie in [2, 16]");
    std::vector<DeterministicStrategy> out;
    out.reserve(std::size_t{1} << m);
    for (std::uint32_t l = 0; l < (1U << m); ++l) out.push_back({l, m});
    return out;
}

SteeringVerdict solve_steering_sdp(const Assemblage& asm_, const IpmOptions& opts) {
    const int m = asm_.settings();
    if (m > kMaxDualSettings) throw ValidationError("solve_steering_sdp: at most 10 settings");
    require_no_signalling(asm_);
    const auto strategies = enumerate_strategies(m);
    const double nstrat = static_cast<double>(strategies.size());

    // Gauge-fixed parameters, one Hermitian block each: G = F_{0|0},
    // H = F_{1|0}, B_x = F_{0|x} for x >= 1 (F_{1|x} = 0).
    const int nparam = m + 1;
    auto param_of = [](int a, int x) { return x == 0 ? a : 1 + x; };

    // Feasible directions: traceless parts of every block, and trace moved
    // from H to any other block, keeping the normalization fixed.
    std::vector<Eigen::VectorXd> basis;
    for (int q = 0; q < nparam; ++q)
        for (int c = 1; c < 4; ++c) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(4 * nparam);
            v(4 * q + c) = 1.0;
            basis.push_back(v);
        }
    for (int q = 0; q < nparam; ++q) {
        if (q == 1) continue;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(4 * nparam);
        v(4 * q) = 1.0;
        v(4 * 1) = -1.0;
        basis.push_back(v);
    }
    const int n = static_cast<int>(basis.size());

    // Objective gradient in parameter coordinates: Re Tr(A B) = 2 a.b.
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(4 * nparam);
    for (int x = 0; x < m; ++x)
        for (int a = 0; a < 2; ++a) {
            if (x > 0 && a == 1) continue;
            grad.segment<4>(4 * param_of(a, x)) = 2.0 * pauli_coords(asm_(a, x));
        }

    BlockSdp sdp;
    sdp.b.resize(n);
    for (int j = 0; j < n; ++j) sdp.b(j) = -grad.dot(basis[static_cast<std::size_t>(j)]);
    const Mat2 start = Mat2::Identity() / (2.0 * nstrat);
    for (const auto& s : strategies) {
        // Y_l = (l(0) == 0 ? G : H) + sum_{x >= 1, l(x) = 0} B_x
        Eigen::MatrixXd pick = Eigen::MatrixXd::Zero(4, 4 * nparam);
        pick.block<4, 4>(0, 4 * param_of(s.outcome(0), 0)).setIdentity();
        for (int x = 1; x < m; ++x)
            if (s.outcome(x) == 0) pick.block<4, 4>(0, 4 * param_of(0, x)).setIdentity();
        CoordMatrix a(4, n);
        for (int j = 0; j < n; ++j) a.col(j) = -pick * basis[static_cast<std::size_t>(j)];
        sdp.c.push_back(start);
        sdp.a.push_back(std::move(a));
    }

    const IpmResult r = solve_block_sdp(sdp, opts, Eigen::VectorXd::Zero(n), 1.0 / (2.0 * nstrat));

    SteeringVerdict v;
    v.status = r.status;
    v.iterations = r.iterations;
    // Start point objective: Tr(sigma_{0|0} + sigma_{1|0}) / 2^{m+1}.
    const double start_objective = (asm_(0, 0) + asm_(1, 0)).trace().real() / (2.0 * nstrat);
    v.objective = start_objective - r.dual_objective;
    v.steerable = v.status == SolverStatus::optimal && v.objective < -v.tolerance;

    Eigen::VectorXd params = Eigen::VectorXd::Zero(4 * nparam);
    params(0) = params(4) = 1.0 / (2.0 * nstrat);
    for (int j = 0; j < n; ++j) params += r.y(j) * basis[static_cast<std::size_t>(j)];
    v.witness.assign(static_cast<std::size_t>(m), {Mat2::Zero(), Mat2::Zero()});
    for (int x = 0; x < m; ++x)
        for (int a = 0; a < 2; ++a) {
            if (x > 0 && a == 1) continue;
            v.witness[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)] =
                from_pauli_coords(params.segment<4>(4 * param_of(a, x)));
        }
    return v;
}

LhsResult lhs_margin(const Assemblage& asm_, const IpmOptions& opts) {
    const int m = asm_.settings();
    if (m > kMaxPrimalSettings) throw ValidationError("lhs_margin: at most 6 settings");
    const auto strategies = enumerate_strategies(m);
    const int nstrat = static_cast<int>(strategies.size());

    // Membership map D: one row per (x, a), one column per strategy.
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2 * m, nstrat);
    Eigen::MatrixXd rhs(2 * m, 4);
    for (int x = 0; x < m; ++x)
        for (int a = 0; a < 2; ++a) {
            for (int l = 0; l < nstrat; ++l)
                if (strategies[static_cast<std::size_t>(l)].assigns(a, x)) d(2 * x + a, l) = 1.0;
            rhs.row(2 * x + a) = pauli_coords(asm_(a, x)).transpose();
        }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    while (rank < sv.size() && sv(rank) > 1e-10 * sv(0)) ++rank;
    Eigen::MatrixXd particular = Eigen::MatrixXd::Zero(nstrat, 4);
    for (int k = 0; k < rank; ++k) {
        particular += svd.matrixV().col(k) * (svd.matrixU().col(k).transpose() * rhs) / sv(k);
    }
    if ((d * particular - rhs).norm() > 1e-9) throw ValidationError("assemblage admits no hidden-state decomposition");
    const Eigen::MatrixXd null = svd.matrixV().rightCols(nstrat - rank);
    const int nnull = static_cast<int>(null.cols());

    // y = (t, u); rho_l = particular_l + sum u_{c,j} null(l, j) E_c and
    // Z_l = rho_l - t I.
    const int n = 1 + 4 * nnull;
    BlockSdp sdp;
    sdp.b = Eigen::VectorXd::Zero(n);
    sdp.b(0) = 1.0;
    double t0 = 0.0;
    for (int l = 0; l < nstrat; ++l) {
        const Mat2 c = from_pauli_coords(particular.row(l).transpose());
        Eigen::SelfAdjointEigenSolver<Mat2> eig(c, Eigen::EigenvaluesOnly);
        t0 = std::min(t0, eig.eigenvalues()(0));
        CoordMatrix a = CoordMatrix::Zero(4, n);
        a(0, 0) = 1.0;
        for (int comp = 0; comp < 4; ++comp)
            for (int j = 0; j < nnull; ++j) a(comp, 1 + comp * nnull + j) = -null(l, j);
        sdp.c.push_back(c);
        sdp.a.push_back(std::move(a));
    }
    Eigen::VectorXd y0 = Eigen::VectorXd::Zero(n);
    y0(0) = t0 - 1.0 / nstrat;

    const IpmResult r = solve_block_sdp(sdp, opts, y0, 1.0 / (2.0 * nstrat));
    LhsResult out;
    out.status = r.status;
    out.margin = r.dual_objective;
    out.feasible = out.status == SolverStatus::optimal && out.margin >= -kSteeringTol;
    return out;
}

bool lhs_feasible(const Assemblage& asm_) {
    const LhsResult r = lhs_margin(asm_);
    if (r.status != SolverStatus::optimal) {
        throw NumericalError("lhs_feasible: solver ended with status " + std::string(to_string(r.status)));
    }
    return r.feasible;
}

LabelResult label_state(const TwoQubitState& rho, int m, int trials, DirectionStrategy strategy,
                        const RandomStream& rng) {
    if (trials < 1) throw ValidationError("label_state: trials must be positive");
    LabelResult out;
    for (int t = 0; t < trials; ++t) {
        RandomStream trial_rng = rng.substream(static_cast<std::uint64_t>(t));
        TrialRecord rec;
        for (int attempt = 0;; ++attempt) {
            rec.directions = sample_directions(m, strategy, trial_rng);
            const SteeringVerdict v = solve_steering_sdp(assemblage(rho, rec.directions));
            rec.objective = v.objective;
            rec.status = v.status;
            if (v.status == SolverStatus::optimal) break;
            if (attempt == kTrialRetries) {
                std::ostringstream msg;
                msg << "label_state: trial " << t << " failed after " << kTrialRetries << " retries";
                throw NumericalError(msg.str());
            }
            ++out.retries;
        }
        if (rec.objective < -kSteeringTol) out.label = -1;
        out.trials.push_back(std::move(rec));
    }
    return out;
}

std::uint64_t trace_digest(const std::vector<TrialRecord>& trials) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const char* s) {
        for (; *s != '\0'; ++s) {
            h ^= static_cast<unsigned char>(*s);
            h *= 0x100000001b3ULL;
        }
    };
    char buf[64];
    for (const auto& t : trials) {
        for (const auto& n : t.directions) {
            for (int i = 0; i < 3; ++i) {
                std::snprintf(buf, sizeof buf, "%.17g,", n[i]);
                feed(buf);
            }
        }
        std::snprintf(buf, sizeof buf, "%.17g;", t.objective);
        feed(buf);
        feed(std::string(to_string(t.status)).c_str());
        feed("|");
    }
    return h;
}

std::optional<double> steering_threshold_scan(double xi, const MeasurementSet& ms, double tol) {
    if (!(tol > 0.0)) throw ValidationError("steering_threshold_scan: tol must be positive");
    auto steerable_at = [&](double p) {
        const SteeringVerdict v = solve_steering_sdp(assemblage(generalized_werner(p, xi), ms));
        if (v.status != SolverStatus::optimal) {
            throw NumericalError("steering_threshold_scan: solver failed at p = " + std::to_string(p));
        }
        return v.steerable;
    };
    if (!steerable_at(1.0)) return std::nullopt;
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (steerable_at(mid) ? hi : lo) = mid;
    }
    return hi;
}

} // namespace steerml
