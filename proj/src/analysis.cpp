#include "siws/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace siws {

namespace {

// (-D_f + (I - Z) B_f) z, with Z acting on the population rows only.
Vector field(const FullSystem& full, const Vector& z) {
    Vector f = full.B_f * z;
    f.head(full.n).array() *= 1.0 - z.head(full.n).array();
    f.array() -= full.D_f.array() * z.array();
    return f;
}

bool interior(const Vector& z, Index n) {
    for (Index i = 0; i < z.size(); ++i) {
        if (!std::isfinite(z(i)) || !(z(i) > 0.0)) return false;
        if (i < n && !(z(i) < 1.0)) return false;
    }
    return true;
}

// Newton on the field, starting from z. Returns true and overwrites z on success.
bool newton_polish(const FullSystem& full, Vector& z, double tol) {
    Vector y = z;
    for (int it = 0; it < 50; ++it) {
        const Vector f = field(full, y);
        const State s = State::from_stacked(y, full.n);
        if (equilibrium_residual(full, s) < tol) {
            z = y;
            return true;
        }
        const Eigen::PartialPivLU<Matrix> lu(field_jacobian(full, s));
        const Vector dy = lu.solve(-f);
        if (!dy.allFinite()) return false;
        y += dy;
        if (!interior(y, full.n)) return false;
    }
    return false;
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

double max_eig_abs(const Matrix& M, double* max_real) {
    const Eigen::EigenSolver<Matrix> es(M, false);
    double r = 0.0, re = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        r = std::max(r, std::abs(es.eigenvalues()(i)));
        re = std::max(re, es.eigenvalues()(i).real());
    }
    if (max_real) *max_real = re;
    return r;
}

} // namespace

const char* to_string(EquilibriumKind k) { return k == EquilibriumKind::endemic ? "endemic" : "healthy-only"; }

const char* to_string(Regime r) {
    switch (r) {
    case Regime::healthy_gas: return "healthy-gas";
    case Regime::endemic_gas: return "endemic-gas";
    case Regime::indeterminate: return "indeterminate";
    }
    return "?";
}

const char* to_string(TwoVirusVerdict v) {
    switch (v) {
    case TwoVirusVerdict::healthy: return "healthy";
    case TwoVirusVerdict::winner: return "winner";
    case TwoVirusVerdict::coexistence_possible: return "coexistence-possible";
    case TwoVirusVerdict::indeterminate: return "indeterminate";
    }
    return "?";
}

// ---------------------------------------------------------------- equilibria

double equilibrium_residual(const FullSystem& full, const State& z) {
    const SpreadingParams p = full.disassemble();
    const Matrix c_hat = p.D_w.cwiseInverse().asDiagonal() * p.C_w;
    const Vector rhs = (p.B + p.B_w * c_hat) * z.x;
    const Vector rx = p.D.array() * z.x.array() / (1.0 - z.x.array()) - rhs.array();
    const Vector rw = z.w - c_hat * z.x;
    double r = 0.0;
    if (rx.size() > 0) r = std::max(r, rx.cwiseAbs().maxCoeff());
    if (rw.size() > 0) r = std::max(r, rw.cwiseAbs().maxCoeff());
    return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
}

EquilibriumResult endemic_fixed_point(const FullSystem& full, const FixedPointOptions& opts) {
    EquilibriumResult out;
    if (s1_shifted(full) <= 1.0) return out;

    const SpreadingParams p = full.disassemble();
    const double w_max = compute_w_max(p, Vector::Zero(full.m));
    Vector z(full.size());
    z.head(full.n).setConstant(0.5);
    z.tail(full.m).setConstant(0.5 * w_max);
    bool done = false;
    if (opts.start) {
        if (opts.start->x.size() != full.n || opts.start->w.size() != full.m)
            throw DimensionError("endemic_fixed_point: start has wrong shape");
        z = opts.start->stacked();
        if (!interior(z, full.n)) throw DomainError("endemic_fixed_point: start must be strictly interior");
        Vector polished = z;
        if (newton_polish(full, polished, opts.tol)) {
            z = polished;
            done = true;
        }
    }

    double next_newton = opts.newton_switch;
    long it = 0;
    while (!done && it < opts.max_iterations) {
        const Vector dz = full.h * field(full, z);
        z += dz;
        ++it;
        const double diff = dz.cwiseAbs().maxCoeff();
        if (diff < next_newton) {
            Vector polished = z;
            if (newton_polish(full, polished, opts.tol)) {
                z = polished;
                break;
            }
            next_newton *= 0.1;
        }
        if (diff == 0.0) break;
    }
    const State s = State::from_stacked(z, full.n);
    out.residual = equilibrium_residual(full, s);
    out.iterations = it;
    if (!(out.residual < opts.tol))
        throw ConvergenceError("endemic_fixed_point: residual " + std::to_string(out.residual) + " after " +
                               std::to_string(it) + " iterations");
    out.z_star = s;
    out.kind = EquilibriumKind::endemic;
    return out;
}

std::pair<double, double> homogeneous_equilibrium(Index n, Index m, double beta, double delta, double c_hat) {
    if (n <= 0 || m < 0) throw DimensionError("homogeneous_equilibrium: need n > 0 and m >= 0");
    if (!(beta > 0.0) || !(delta > 0.0)) throw DomainError("homogeneous_equilibrium: beta and delta must be positive");
    if (!(c_hat >= 0.0)) throw DomainError("homogeneous_equilibrium: c_hat must be nonnegative");
    const double gain = static_cast<double>(n) * beta * (1.0 + static_cast<double>(m) * c_hat);
    const double x = 1.0 - delta / gain;
    if (std::abs(x) <= 1e-14) return {0.0, 0.0};
    if (x < 0.0) throw DomainError("homogeneous_equilibrium: no endemic equilibrium (x* = " + std::to_string(x) + ")");
    return {x, static_cast<double>(n) * c_hat * x};
}

Matrix field_jacobian(const FullSystem& full, const State& z) {
    const Index n = full.n;
    const Vector zs = z.stacked();
    Matrix L = full.B_f;
    L.topRows(n).array().colwise() *= 1.0 - zs.head(n).array();
    L.diagonal() -= full.D_f;
    const Vector bz = full.B_f.topRows(n) * zs;
    L.diagonal().head(n) -= bz;
    return L;
}

State sensitivity(const FullSystem& full, const State& z_star, const Vector& dDf, const Matrix& dBf) {
    const Index N = full.size();
    if (dDf.size() != N || dBf.rows() != N || dBf.cols() != N)
        throw DimensionError("sensitivity: perturbations must match the full system");
    const Vector zs = z_star.stacked();
    Vector rhs = zs.cwiseProduct(dDf);
    Vector t = dBf * zs;
    t.head(full.n).array() *= zs.head(full.n).array() - 1.0;
    t.tail(full.m) *= -1.0;
    rhs += t;
    const Eigen::FullPivLU<Matrix> lu(field_jacobian(full, z_star));
    if (!lu.isInvertible() || lu.rcond() < 1e-14) throw DomainError("sensitivity: linearization is singular");
    return State::from_stacked(lu.solve(rhs), full.n);
}

Matrix ErrorDynamics::phi(const Vector& x) const {
    const Index n = full.n, m = full.m;
    const SpreadingParams p = full.disassemble();
    const double h = full.h;
    Matrix M = Matrix::Zero(n + m, n + m);
    const Vector s = Vector::Ones(n) - x;
    M.topLeftCorner(n, n) = s.asDiagonal() * (h * p.B);
    M.topLeftCorner(n, n).diagonal().array() += 1.0 - h * p.D.array() / (1.0 - z_star.x.array());
    M.topRightCorner(n, m) = s.asDiagonal() * (h * p.B_w);
    M.bottomLeftCorner(m, n) = h * p.C_w;
    M.bottomRightCorner(m, m).diagonal().array() = 1.0 - h * p.D_w.array();
    return M;
}

ErrorDynamics error_matrices(const FullSystem& full, const State& z_star) {
    if (z_star.x.size() != full.n || z_star.w.size() != full.m)
        throw DimensionError("error_matrices: equilibrium has wrong shape");
    if (!(z_star.x(0) > 0.0) || z_star.x.maxCoeff() >= 1.0)
        throw DomainError("error_matrices: equilibrium must be endemic with x* < 1");
    ErrorDynamics e{full, z_star, {}, {}};
    e.F = e.phi(Vector::Zero(full.n));
    e.mu = z_star.stacked() / z_star.x(0);
    return e;
}

// ---------------------------------------------------------------- classification

AssumptionFlags check_assumptions(const FullSystem& full) {
    const SpreadingParams p = full.disassemble();
    const ValidationReport rep = validate(p, State::zero(full.n, full.m), full.h);
    AssumptionFlags f;
    f.well_defined = true;
    f.irreducible = true;
    for (const Violation& v : rep.violations) (v.assumption == "A2" ? f.irreducible : f.well_defined) = false;
    f.endemic_step = rep.endemic_violations.empty();
    return f;
}

Classification classify_single(const FullSystem& full) {
    Classification c;
    c.assumptions = check_assumptions(full);
    Matrix A = full.B_f;
    A.diagonal() -= full.D_f;
    c.s1 = 1.0 + full.h * metzler_abscissa(A);
    c.rate = c.s1;
    try {
        c.r0 = reproduction_number(full);
        c.threshold_consistent = sign_of(c.s1 - 1.0) == sign_of(c.r0 - 1.0);
    } catch (const DomainError&) {
        c.r0 = std::numeric_limits<double>::quiet_NaN();
        c.threshold_consistent = false;
    }
    const bool ok = c.assumptions.well_defined && c.assumptions.irreducible;
    if (ok && c.s1 <= 1.0)
        c.regime = Regime::healthy_gas;
    else if (ok && c.assumptions.endemic_step)
        c.regime = Regime::endemic_gas;
    return c;
}

Envelope envelope(const ParameterSchedule& schedule) {
    const auto samples = schedule.samples();
    if (samples.empty()) throw DimensionError("envelope: schedule has no samples");
    Envelope e;
    for (const SpreadingParams* p : samples) {
        const FullSystem f = assemble_full(*p, 1.0);
        if (e.B_f_max.size() == 0) {
            e.B_f_max = f.B_f;
            e.D_f_min = f.D_f;
        } else {
            e.B_f_max = e.B_f_max.cwiseMax(f.B_f);
            e.D_f_min = e.D_f_min.cwiseMin(f.D_f);
        }
    }
    return e;
}

Classification classify_tv(const ParameterSchedule& schedule, double h, const Envelope& bounds) {
    const auto samples = schedule.samples();
    if (samples.empty()) throw DimensionError("classify_tv: schedule has no samples");
    const Index N = samples.front()->n() + samples.front()->m();
    if (bounds.B_f_max.rows() != N || bounds.B_f_max.cols() != N || bounds.D_f_min.size() != N)
        throw DimensionError("classify_tv: envelope does not match the schedule");

    Classification c;
    c.assumptions = {true, true, true};
    for (const SpreadingParams* p : samples) {
        const FullSystem f = assemble_full(*p, h);
        if ((f.B_f.array() > bounds.B_f_max.array()).any() || (f.D_f.array() < bounds.D_f_min.array()).any())
            throw DomainError("classify_tv: a piece exceeds the envelope");
        const AssumptionFlags a = check_assumptions(f);
        c.assumptions.well_defined = c.assumptions.well_defined && a.well_defined;
        c.assumptions.irreducible = c.assumptions.irreducible && a.irreducible;
        c.assumptions.endemic_step = c.assumptions.endemic_step && a.endemic_step;
        try {
            c.piece_r0.push_back(reproduction_number(f));
        } catch (const DomainError&) {
            c.piece_r0.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    if (samples.size() == 1) {
        Classification single = classify_single(assemble_full(*samples.front(), h));
        single.piece_r0 = c.piece_r0;
        return single;
    }

    FullSystem env;
    env.B_f = bounds.B_f_max;
    env.D_f = bounds.D_f_min;
    env.h = h;
    env.n = samples.front()->n();
    env.m = samples.front()->m();
    Matrix A = env.B_f;
    A.diagonal() -= env.D_f;
    c.s1 = 1.0 + h * metzler_abscissa(A);
    c.rate = c.s1;
    try {
        c.r0 = reproduction_number(env);
        c.threshold_consistent = sign_of(c.s1 - 1.0) == sign_of(c.r0 - 1.0);
    } catch (const DomainError&) {
        c.r0 = std::numeric_limits<double>::quiet_NaN();
        c.threshold_consistent = false;
    }
    const AssumptionFlags env_flags = check_assumptions(env);
    if (c.assumptions.well_defined && c.assumptions.irreducible && env_flags.well_defined && c.s1 <= 1.0)
        c.regime = Regime::healthy_gas;
    return c;
}

// ---------------------------------------------------------------- homogeneous families

SpreadingParams homogeneous_params(Index n, Index m, const HomogeneousRates& r) {
    SpreadingParams p;
    p.B = Matrix::Constant(n, n, r.beta);
    p.B_w = Matrix::Constant(n, m, r.beta);
    p.C_w = Matrix::Constant(m, n, r.c);
    p.D = Vector::Constant(n, r.delta);
    p.D_w = Vector::Constant(m, r.delta_w);
    return p;
}

OmegaFamily omega_family(double x_star_target, Index n, Index m, const HomogeneousRates& base,
                         std::span<const double> scales, double h, long dwell, bool allow_asymmetric) {
    if (dwell <= 0) throw std::invalid_argument("omega_family: dwell must be positive");
    if (!(base.delta_w > 0.0)) throw DomainError("omega_family: delta_w must be positive");
    if (!allow_asymmetric && base.beta != base.c)
        throw DomainError("omega_family: B_f is symmetric only when beta == c");
    const auto [x_star, w_star] = homogeneous_equilibrium(n, m, base.beta, base.delta, base.c / base.delta_w);
    if (!(std::abs(x_star - x_star_target) <= 1e-9 * std::max(1.0, std::abs(x_star_target))))
        throw DomainError("omega_family: base equilibrium x* = " + std::to_string(x_star) +
                          " does not match the target " + std::to_string(x_star_target));

    OmegaFamily fam;
    fam.z_star = State(Vector::Constant(n, x_star), Vector::Constant(m, w_star));
    std::vector<ParameterSchedule::Piece> pieces;
    for (const double a : scales) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            fam.rejected.emplace_back(a, "scale must be positive");
            continue;
        }
        const HomogeneousRates r{a * base.beta, a * base.delta, a * base.c, a * base.delta_w};
        SpreadingParams p = homogeneous_params(n, m, r);
        const ValidationReport rep = validate(p, State::zero(n, m), h);
        if (!rep.endemic_ready()) {
            const Violation& v = rep.violations.empty() ? rep.endemic_violations.front() : rep.violations.front();
            fam.rejected.emplace_back(a, v.assumption + " at " + v.location + ": " + v.message);
            continue;
        }
        fam.accepted.push_back(a);
        pieces.push_back({static_cast<long>(pieces.size()) * dwell, std::move(p)});
    }
    if (pieces.empty()) throw DomainError("omega_family: every scale was rejected");
    const long period = static_cast<long>(pieces.size()) * dwell;
    fam.schedule = pieces.size() == 1 ? ParameterSchedule::constant(pieces.front().params)
                                      : ParameterSchedule::periodic(std::move(pieces), period);
    return fam;
}

// ---------------------------------------------------------------- two viruses

bool dominates(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) throw DimensionError("dominates: shapes differ");
    return (A.array() >= B.array()).all() && A != B;
}

TwoVirusReport two_virus_analysis(const MultiVirusScenario& scenario) {
    scenario.check_shapes();
    if (scenario.l() != 2) throw DimensionError("two_virus_analysis: exactly two viruses required");
    if (scenario.m() != 1) throw DimensionError("two_virus_analysis: exactly one resource required");
    const double h = scenario.h;
    const Index n = scenario.n();

    TwoVirusReport rep;
    FullSystem full[2];
    Matrix ratio[2];
    for (int k = 0; k < 2; ++k) {
        full[k] = assemble_full(scenario.viruses[k], h);
        rep.r0[k] = reproduction_number(full[k]);
        rep.s1[k] = s1_shifted(full[k]);
        if (rep.s1[k] > 1.0) rep.z_star[k] = endemic_fixed_point(full[k]).z_star;
        ratio[k] = full[k].D_f.cwiseInverse().asDiagonal() * full[k].B_f;
    }
    rep.dominates[0] = dominates(ratio[0], ratio[1]);
    rep.dominates[1] = dominates(ratio[1], ratio[0]);

    if (!rep.z_star[0] && !rep.z_star[1]) {
        rep.verdict = TwoVirusVerdict::healthy;
        return rep;
    }

    constexpr double zero_band = 1e-12;
    if (rep.z_star[0] && rep.z_star[1]) {
        for (int k = 0; k < 2; ++k) {
            const int o = 1 - k;
            Matrix A = full[k].B_f;
            A.topRows(n).array().colwise() *= 1.0 - rep.z_star[o]->x.array();
            A.diagonal() -= full[k].D_f;
            double v = h * metzler_abscissa(A);
            if (std::abs(v) <= zero_band) v = 0.0;
            rep.crossed[k] = v;
        }
    }

    // Candidate dominant virus: the only supercritical one, or the one whose
    // ratio matrix dominates.
    int cand = -1;
    if (!rep.z_star[1])
        cand = 0;
    else if (!rep.z_star[0])
        cand = 1;
    else if (rep.dominates[0])
        cand = 0;
    else if (rep.dominates[1])
        cand = 1;

    if (cand >= 0) {
        const int o = 1 - cand;
        const Index N = n + 1;
        const State& zs = *rep.z_star[cand];
        Matrix T = Matrix::Zero(N, N);
        T.diagonal().head(n) = full[cand].B_f.topRows(n) * zs.stacked();
        Matrix Jo = full[o].B_f;
        Jo.topRows(n).array().colwise() *= 1.0 - zs.x.array();
        Jo.diagonal() -= full[o].D_f;
        rep.J = Matrix::Zero(2 * N, 2 * N);
        rep.J.topLeftCorner(N, N) = field_jacobian(full[cand], zs);
        rep.J.topRightCorner(N, N) = -T;
        rep.J.bottomRightCorner(N, N) = Jo;
        const double r = max_eig_abs(rep.J, &rep.j_abscissa);
        rep.h_bound = r > 0.0 ? 2.0 / r : std::numeric_limits<double>::infinity();
        // A lone supercritical virus wins globally; otherwise the local
        // result needs the ordering and the step bound.
        if (!rep.z_star[o] || (rep.dominates[cand] && h < rep.h_bound)) {
            rep.verdict = TwoVirusVerdict::winner;
            rep.winner = cand + 1;
            return rep;
        }
    }
    if (rep.crossed[0] && rep.crossed[1] && *rep.crossed[0] > 0.0 && *rep.crossed[1] > 0.0)
        rep.verdict = TwoVirusVerdict::coexistence_possible;
    else
        rep.verdict = TwoVirusVerdict::indeterminate;
    return rep;
}

} // namespace siws
