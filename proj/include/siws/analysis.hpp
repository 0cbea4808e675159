#pragma once

#include "siws/dynamics.hpp"
#include "siws/spectral.hpp"

#include <optional>

namespace siws {

enum class EquilibriumKind { healthy_only, endemic };

const char* to_string(EquilibriumKind k);

struct EquilibriumResult {
    std::optional<State> z_star;
    double residual = 0.0;
    long iterations = 0;
    EquilibriumKind kind = EquilibriumKind::healthy_only;
};

struct FixedPointOptions {
    double tol = 1e-10;          // residual of the equilibrium equations
    long max_iterations = 20'000'000;
    double newton_switch = 1e-7; // successive-difference level at which Newton polishing is tried
    std::optional<State> start;  // replaces the default interior start, e.g. a nearby equilibrium
};

/// Residual of the endemic equilibrium equations
///   delta_i x_i / (1 - x_i) = sum_j (sum_k beta^w_ik c^_kj + beta_ij) x_j
///   w_j = sum_k c^_jk x_k,  c^_jk = c^w_jk / delta^w_j
/// as a max-norm.
double equilibrium_residual(const FullSystem& full, const State& z);

/// Endemic equilibrium of the time-invariant map, found by iterating the
/// map from the interior point 0.5 * (1, w_max 1) (or opts.start) and polishing with Newton
/// steps on the equilibrium equations once the iterates settle. Returns
/// healthy-only when s1(I - h D_f + h B_f) <= 1.
EquilibriumResult endemic_fixed_point(const FullSystem& full, const FixedPointOptions& opts = {});

/// Closed-form equilibrium of the homogeneous model (all beta, beta^w equal
/// to `beta`, all c^w to c, so c_hat = c / delta^w).
std::pair<double, double> homogeneous_equilibrium(Index n, Index m, double beta, double delta, double c_hat);

/// Jacobian of the continuous field (-D_f + (I - Z) B_f) z at z, i.e.
/// -D_f + (I - Z) B_f - diag((B_f z)_{1..n}, 0).
Matrix field_jacobian(const FullSystem& full, const State& z);

/// First-order change of the endemic equilibrium under perturbations of
/// the healing/decay rates (dDf) and of B_f (dBf):
///   dz = L^{-1} [diag(z*) dDf + (Z* - I) dBf z*],  L = field_jacobian(z*).
/// Throws DomainError when L is numerically singular.
State sensitivity(const FullSystem& full, const State& z_star, const Vector& dDf, const Matrix& dBf);

/// Error-dynamics view of the endemic equilibrium: e(t+1) = phi(x(t)) e(t)
/// with e = z - z*, the constant upper bound F = phi(0), and its fixed
/// vector mu = z* / x*_1.
struct ErrorDynamics {
    FullSystem full;
    State z_star;
    Matrix F;
    Vector mu;

    Matrix phi(const Vector& x) const;
};

ErrorDynamics error_matrices(const FullSystem& full, const State& z_star);

enum class Regime { healthy_gas, endemic_gas, indeterminate };

const char* to_string(Regime r);

struct AssumptionFlags {
    bool well_defined = false; // A1 (parameter bullets)
    bool irreducible = false;  // A2
    bool endemic_step = false; // A6
};

struct Classification {
    Regime regime = Regime::indeterminate;
    double r0 = 0.0;  // rho(D_f^{-1} B_f), or the effective number for schedules
    double s1 = 0.0;  // s1(I - h D_f + h B_f), or of the envelope
    double rate = 0.0;
    bool threshold_consistent = true; // sign(s1 - 1) == sign(r0 - 1)
    AssumptionFlags assumptions;
    std::vector<double> piece_r0; // time-varying only
};

/// Assumption flags for a parameter set alone (w_max from the rates).
AssumptionFlags check_assumptions(const FullSystem& full);

Classification classify_single(const FullSystem& full);

struct Envelope {
    Matrix B_f_max;
    Vector D_f_min;
};

/// Element-wise max of B_f and min of D_f over the schedule's samples.
Envelope envelope(const ParameterSchedule& schedule);

/// Healthy-state verdict for a time-varying schedule from envelope bounds.
/// Throws DomainError if a piece exceeds the envelope (B_f(t) > B_f_max or
/// D_f(t) < D_f_min somewhere). A single-piece schedule gets the verdict of
/// classify_single.
Classification classify_tv(const ParameterSchedule& schedule, double h, const Envelope& bounds);

struct HomogeneousRates {
    double beta = 0.0;    // person-person and resource-person rate
    double delta = 0.0;   // healing rate
    double c = 0.0;       // person-resource contamination rate
    double delta_w = 0.0; // decay rate
};

SpreadingParams homogeneous_params(Index n, Index m, const HomogeneousRates& r);

struct OmegaFamily {
    ParameterSchedule schedule; // one piece per accepted scale, `dwell` steps each, periodic
    std::vector<double> accepted;
    std::vector<std::pair<double, std::string>> rejected; // scale, reason
    State z_star;
};

/// Family of homogeneous parameter sets (alpha beta, alpha delta, alpha c,
/// alpha delta_w) sharing the endemic equilibrium of `base`. Scales whose
/// piece fails validation (A1, A2 or A6) are rejected. B_f must be
/// symmetric (beta == c) unless `allow_asymmetric` is set. Throws if
/// x_star_target does not match the base equilibrium, or no scale survives.
OmegaFamily omega_family(double x_star_target, Index n, Index m, const HomogeneousRates& base,
                         std::span<const double> scales, double h, long dwell, bool allow_asymmetric = false);

enum class TwoVirusVerdict { healthy, winner, coexistence_possible, indeterminate };

const char* to_string(TwoVirusVerdict v);

struct TwoVirusReport {
    double r0[2] = {0.0, 0.0};
    double s1[2] = {0.0, 0.0};
    std::optional<State> z_star[2];
    // s1(-h D^1_f + h (I - Z*2) B^1_f) and its mirror; only when both
    // viruses are supercritical.
    std::optional<double> crossed[2];
    bool dominates[2] = {false, false}; // dominates[0]: (D1)^-1 B1 > (D2)^-1 B2
    Matrix J;                           // Jacobian at the candidate dominant equilibrium
    double h_bound = 0.0;               // 2 / rho(J)
    double j_abscissa = 0.0;            // largest real part of eig(J)
    TwoVirusVerdict verdict = TwoVirusVerdict::indeterminate;
    int winner = 0; // 1 or 2 when verdict == winner
};

/// Two viruses sharing one resource: single-virus equilibria, invasion
/// (crossed) conditions, dominance ordering and the local-stability step
/// bound at the dominant equilibrium.
TwoVirusReport two_virus_analysis(const MultiVirusScenario& scenario);

/// Partial order used for dominance: A >= B element-wise and A != B.
bool dominates(const Matrix& A, const Matrix& B);

} // namespace siws
