#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "steerml/block_sdp.hpp"
#include "steerml/measurement.hpp"
#include "steerml/qstate.hpp"
#include "steerml/rng.hpp"

namespace steerml {

inline constexpr double kSteeringTol = 1e-7;
inline constexpr int kMaxStrategySettings = 16;
inline constexpr int kMaxDualSettings = 10;
inline constexpr int kMaxPrimalSettings = 6;
inline constexpr int kTrialRetries = 3;

// Deterministic outcome assignment: bit x of lambda is the outcome for setting x.
struct DeterministicStrategy {
    std::uint32_t lambda = 0;
    int m = 0;

    int outcome(int x) const { return static_cast<int>((lambda >> x) & 1U); }
    bool assigns(int a, int x) const { return outcome(x) == a; }
};

// All 2^m strategies in increasing lambda order; 2 <= m <= 16.
std::vector<DeterministicStrategy> enumerate_strategies(int m);

struct SteeringVerdict {
    double objective = 0.0;
    bool steerable = false;
    double tolerance = kSteeringTol;
    SolverStatus status = SolverStatus::numerical_failure;
    int iterations = 0;
    // Optimal F_{a|x}, indexed [x][a]. The objective only fixes F up to
    // F_{a|x} -> F_{a|x} + G_x with sum_x G_x = 0; the returned witness has
    // F_{1|x} = 0 for x >= 1.
    std::vector<std::array<Mat2, 2>> witness;
};

// min Tr sum_{ax} F_{a|x} sigma_{a|x}
//   s.t. sum_{ax} D(a|x,l) F_{a|x} >= 0 for all l,  Tr sum_{ax,l} D(a|x,l) F_{a|x} = 1.
// Negative optimum (below -tolerance) certifies steering. m <= 10.
SteeringVerdict solve_steering_sdp(const Assemblage& asm_, const IpmOptions& opts = {});

struct LhsResult {
    // max t such that sigma_{a|x} = sum_l D(a|x,l) rho_l with every rho_l >= t I.
    double margin = 0.0;
    bool feasible = false;
    SolverStatus status = SolverStatus::numerical_failure;
};

// Primal local-hidden-state search over explicit rho_l blocks, built from an
// SVD parametrization of the membership equalities. m <= 6.
LhsResult lhs_margin(const Assemblage& asm_, const IpmOptions& opts = {});
// Throws NumericalError if the solver does not converge.
bool lhs_feasible(const Assemblage& asm_);

struct TrialRecord {
    MeasurementSet directions;
    double objective = 0.0;
    SolverStatus status = SolverStatus::numerical_failure;
};

struct LabelResult {
    int label = 1; // -1 steering detected, +1 not detected
    std::vector<TrialRecord> trials;
    int retries = 0;
};

// Trial t draws its directions from rng.substream(t); a trial whose solve
// fails is re-drawn from the same substream up to kTrialRetries times, then
// NumericalError is thrown.
LabelResult label_state(const TwoQubitState& rho, int m, int trials, DirectionStrategy strategy,
                        const RandomStream& rng);

// 64-bit FNV-1a digest of the trial records (directions, objectives, status).
std::uint64_t trace_digest(const std::vector<TrialRecord>& trials);

// Bisection over p of generalized_werner(p, xi) for the smallest p declared
// steerable with measurement set ms, to interval width tol. nullopt if p = 1
// is not steerable.
std::optional<double> steering_threshold_scan(double xi, const MeasurementSet& ms, double tol);

} // namespace steerml
