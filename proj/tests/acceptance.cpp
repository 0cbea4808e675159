// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "fixtures.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace siws;
namespace fx = siws::fixtures;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

State half_state(Index n, Index m) { return {Vector::Constant(n, 0.5), Vector::Constant(m, 0.5)}; }

// Scenario pools shared between criteria; generated once.
const std::vector<ScenarioFile>& subcritical_pool() {
    static const std::vector<ScenarioFile> pool = [] {
        std::vector<ScenarioFile> v;
        for (std::uint64_t s = 1; s <= 50; ++s) v.push_back(fx::standard_network(s, Target::subcritical));
        return v;
    }();
    return pool;
}

const std::vector<ScenarioFile>& supercritical_pool() {
    static const std::vector<ScenarioFile> pool = [] {
        std::vector<ScenarioFile> v;
        for (std::uint64_t s = 101; s <= 150; ++s) v.push_back(fx::standard_network(s, Target::supercritical));
        return v;
    }();
    return pool;
}

const std::vector<ScenarioFile>& mixed_pool() {
    static const std::vector<ScenarioFile> pool = [] {
        std::vector<ScenarioFile> v;
        for (std::uint64_t s = 301; s <= 350; ++s) v.push_back(fx::standard_network(s, Target::mixed, 2));
        return v;
    }();
    return pool;
}

// Discrete limits reused by the continuous comparison.
std::map<std::size_t, State> healthy_limits;
std::map<std::size_t, std::vector<State>> winner_limits;

// ---------------------------------------------------------------- criteria

Outcome healthy_convergence() {
    const auto t0 = std::chrono::steady_clock::now();
    SimulationOptions o;
    o.max_steps = 1'000'000;
    o.tol = 1e-14;
    o.stride = 1'000'000;
    double worst = 0.0;
    int ok = 0;
    const auto& pool = subcritical_pool();
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const SpreadingParams p = fx::single_params(pool[i]);
        const Trajectory t = simulate(half_state(p.n(), p.m()), ParameterSchedule::constant(p), pool[i].h, o);
        healthy_limits[i] = t.limit[0];
        const double norm = t.limit[0].max_norm();
        worst = std::max(worst, norm);
        if (norm < 1e-8 && t.steps <= o.max_steps && s1_shifted(assemble_full(p, pool[i].h)) <= 1.0) ++ok;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Outcome r;
    r.pass = ok == static_cast<int>(pool.size()) && secs < 60.0;
    r.detail = std::to_string(ok) + "/" + std::to_string(pool.size()) + " reach max-norm < 1e-8 within 1e6 steps; worst " +
               sci(worst) + "; " + sci(secs) + " s (limit 60 s)";
    return r;
}

Outcome endemic_convergence() {
    SimulationOptions o;
    o.tol = 1e-13;
    o.stride = 1'000'000;
    double worst = 0.0;
    int ok = 0;
    for (const ScenarioFile& f : supercritical_pool()) {
        const SpreadingParams p = fx::single_params(f);
        const ValidationReport rep = validate(p, f.viruses[0].initial, f.h);
        const EquilibriumResult eq = endemic_fixed_point(assemble_full(p, f.h));
        const Trajectory t = simulate(f.viruses[0].initial, ParameterSchedule::constant(p), f.h, o);
        const double d = t.limit[0].max_abs_diff(*eq.z_star);
        worst = std::max(worst, d);
        if (rep.endemic_ready() && t.converged && d < 1e-6 && f.viruses[0].initial.max_norm() > 0.0) ++ok;
    }
    return {ok == 50, std::to_string(ok) + "/50 limits match the fixed point within 1e-6; worst " + sci(worst)};
}

Outcome homogeneous_closed_form() {
    PortableRng rng(2024);
    SimulationOptions o;
    o.tol = 1e-13;
    o.stride = 1'000'000;
    const double h = 0.01;
    int ok = 0, made = 0;
    double worst = 0.0;
    while (made < 20) {
        const Index n = 2 + static_cast<Index>(rng.index(7));
        const Index m = 1 + static_cast<Index>(rng.index(3));
        HomogeneousRates r;
        r.delta = rng.uniform(0.1, 1.0);
        r.delta_w = rng.uniform(0.1, 1.0);
        r.c = rng.uniform(0.05, 1.0);
        const double c_hat = r.c / r.delta_w;
        const double x_target = rng.uniform(0.1, 0.9);
        r.beta = r.delta / ((1.0 - x_target) * static_cast<double>(n) * (1.0 + static_cast<double>(m) * c_hat));
        const SpreadingParams p = homogeneous_params(n, m, r);
        State z0{Vector(n), Vector(m)};
        for (Index i = 0; i < n; ++i) z0.x(i) = rng.uniform01();
        for (Index j = 0; j < m; ++j) z0.w(j) = rng.uniform01() * static_cast<double>(n) * c_hat;
        if (!validate(p, z0, h).endemic_ready()) continue;
        ++made;
        const auto [xs, ws] = homogeneous_equilibrium(n, m, r.beta, r.delta, c_hat);
        const State closed{Vector::Constant(n, xs), Vector::Constant(m, ws)};
        const Trajectory t = simulate(z0, ParameterSchedule::constant(p), h, o);
        const double d = t.limit[0].max_abs_diff(closed);
        worst = std::max(worst, d);
        if (t.converged && d < 1e-6) ++ok;
    }
    return {ok == 20, std::to_string(ok) + "/20 homogeneous limits within 1e-6 of the closed form; worst " + sci(worst)};
}

Outcome local_rate() {
    int ok = 0;
    double worst_ratio = 0.0, worst_gap = 0.0;
    for (std::uint64_t seed = 201; seed <= 220; ++seed) {
        const ScenarioFile f = fx::standard_network(seed, Target::subcritical);
        const SpreadingParams p = fx::single_params(f);
        const double s1 = s1_shifted(assemble_full(p, f.h));
        PortableRng rng(seed);
        State z{Vector(p.n()), Vector(p.m())};
        for (Index i = 0; i < p.n(); ++i) z.x(i) = 1e-6 * rng.uniform01();
        for (Index j = 0; j < p.m(); ++j) z.w(j) = 1e-6 * rng.uniform01();
        double ratio = 0.0;
        for (int t = 0; t < 50'000 && z.max_norm() > 1e-250; ++t) {
            const State next = step_single(z, p, f.h);
            ratio = next.max_norm() / z.max_norm();
            z = next;
        }
        const double rel_ratio = std::abs(ratio - s1) / s1;
        const double rel_gap = std::abs((1.0 - ratio) - (1.0 - s1)) / (1.0 - s1);
        worst_ratio = std::max(worst_ratio, rel_ratio);
        worst_gap = std::max(worst_gap, rel_gap);
        if (rel_ratio <= 0.05 && rel_gap <= 0.05) ++ok;
    }
    return {ok == 20, std::to_string(ok) + "/20 within 5%; worst relative error of ratio " + sci(worst_ratio) +
                          ", of 1-ratio vs 1-s1 " + sci(worst_gap)};
}

Outcome threshold_equivalence() {
    PortableRng rng(777);
    int checked = 0, disagree = 0, attempts = 0;
    while (checked < 10'000) {
        ++attempts;
        const Index n = 1 + static_cast<Index>(rng.index(8));
        const Index m = 1 + static_cast<Index>(rng.index(4));
        const double kappa = std::exp(rng.uniform(std::log(0.02), std::log(20.0)));
        const double h = std::exp(rng.uniform(std::log(1e-3), std::log(0.1)));
        const SpreadingParams p = fx::random_params(rng, n, m, 0.5, kappa);
        if (!validate(p, State::zero(n, m), h).passed) continue;
        ++checked;
        const FullSystem full = assemble_full(p, h);
        const double s1 = s1_shifted(full), r0 = reproduction_number(full);
        if (((s1 > 1.0) - (s1 < 1.0)) != ((r0 > 1.0) - (r0 < 1.0))) ++disagree;
    }
    return {disagree == 0, std::to_string(disagree) + " disagreements on " + std::to_string(checked) +
                               " validated systems (" + std::to_string(attempts) + " drawn)"};
}

Outcome r0_monotonicity() {
    int total = 0, ok = 0;
    double min_gap = 1e300;
    auto check = [&](const ScenarioFile& f) {
        for (std::size_t k = 0; k < f.l(); ++k) {
            const SpreadingParams p = fx::single_params(f, k);
            const double full = reproduction_number(assemble_full(p, f.h));
            PowerOptions po;
            po.left = false;
            const double sis = spectral_radius(p.D.cwiseInverse().asDiagonal() * p.B, po).rho;
            ++total;
            min_gap = std::min(min_gap, full - sis);
            if (full > sis) ++ok;
        }
    };
    for (const auto& f : subcritical_pool()) check(f);
    for (const auto& f : supercritical_pool()) check(f);
    for (const auto& f : mixed_pool()) check(f);
    return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " generated viruses; smallest margin " + sci(min_gap)};
}

Outcome sensitivity_signs() {
    const double eps = 1e-6;
    int scenarios_ok = 0;
    long checks = 0, sign_fail = 0, fd_fail = 0;
    double worst = 0.0;
    PortableRng rng(55);
    for (const ScenarioFile& f : supercritical_pool()) {
        const FullSystem full = assemble_full(fx::single_params(f), f.h);
        FixedPointOptions fo;
        fo.tol = 1e-12;
        const State zs = *endemic_fixed_point(full, fo).z_star;
        fo.start = zs;
        const Index N = full.size();
        auto solve = [&](const FullSystem& g) { return endemic_fixed_point(g, fo).z_star->stacked(); };
        bool ok = true;
        for (Index i = 0; i < N; ++i) {
            for (int kind = 0; kind < 2; ++kind) {
                Vector dD = Vector::Zero(N);
                Matrix dB = Matrix::Zero(N, N);
                const Index j = static_cast<Index>(rng.index(static_cast<std::size_t>(i < full.n ? N : full.n)));
                if (kind == 0) dD(i) = 1.0;
                else dB(i, j) = 1.0;
                const Vector analytic = sensitivity(full, zs, dD, dB).stacked();
                FullSystem up = full, down = full;
                up.D_f += eps * dD;
                down.D_f -= eps * dD;
                up.B_f += eps * dB;
                down.B_f -= eps * dB;
                if (kind == 1 && full.B_f(i, j) < eps) down.B_f(i, j) = full.B_f(i, j); // keep entries nonnegative
                const double span = kind == 1 && full.B_f(i, j) < eps ? eps : 2.0 * eps;
                const Vector fd = (solve(up) - solve(down)) / span;
                const double err = (analytic - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff();
                worst = std::max(worst, err);
                ++checks;
                const bool sign_ok = kind == 0 ? analytic(i) < 0.0 : analytic(i) > 0.0;
                if (!sign_ok) ++sign_fail;
                if (!(err <= 1e-3)) ++fd_fail;
                ok = ok && sign_ok && err <= 1e-3;
            }
        }
        if (ok) ++scenarios_ok;
    }
    return {scenarios_ok == 50, std::to_string(scenarios_ok) + "/50 scenarios; " + std::to_string(checks) +
                                    " perturbations, " + std::to_string(sign_fail) + " sign failures, " +
                                    std::to_string(fd_fail) + " finite-difference mismatches; worst relative error " +
                                    sci(worst)};
}

// Snapshot at `step` of a run that may have stopped earlier on an exact fixed point.
const State& state_at(const Trajectory& t, std::size_t k, long step) {
    for (const Snapshot& s : t.snapshots)
        if (s.step == step) return s.states[k];
    return t.limit[k];
}

Outcome winner_takes_all() {
    SimulationOptions o;
    o.tol = 1e-13;
    o.stride = 10;
    int ok = 0, bound_ok = 0;
    double worst_limit = 0.0, worst_bound = 0.0;
    const auto& pool = mixed_pool();
    for (std::size_t idx = 0; idx < pool.size(); ++idx) {
        const ScenarioFile& f = pool[idx];
        const MultiVirusScenario s = f.scenario();
        const FullSystem f1 = assemble_full(s.viruses[0], s.h), f2 = assemble_full(s.viruses[1], s.h);
        const bool regime = reproduction_number(f1) > 1.0 && reproduction_number(f2) <= 1.0;
        const State z1 = *endemic_fixed_point(f1).z_star;
        const Trajectory t = simulate_multi(s, o);
        winner_limits[idx] = t.limit;
        const double d = std::max(t.limit[0].max_abs_diff(z1), t.limit[1].max_norm());
        worst_limit = std::max(worst_limit, d);
        if (regime && t.converged && d < 1e-6) ++ok;

        // Each virus stays below its single-virus run from the same start.
        bool bounded = true;
        for (std::size_t k = 0; k < 2; ++k) {
            SimulationOptions so;
            so.tol = 1e-300; // fixed step count unless an exact fixed point is hit
            so.max_steps = t.steps;
            so.stride = o.stride;
            const Trajectory single = simulate(s.initial[k], ParameterSchedule::constant(s.viruses[k]), s.h, so);
            for (const Snapshot& snap : t.snapshots) {
                const State& up = state_at(single, 0, snap.step);
                const double excess = std::max((snap.states[k].x - up.x).maxCoeff(), (snap.states[k].w - up.w).maxCoeff());
                worst_bound = std::max(worst_bound, excess);
                if (excess > 1e-12) bounded = false;
            }
        }
        if (bounded) ++bound_ok;
    }
    return {ok == 50 && bound_ok == 50,
            std::to_string(ok) + "/50 converge to (z*1, 0) within 1e-6 (worst " + sci(worst_limit) + "); " +
                std::to_string(bound_ok) + "/50 respect the single-virus bound at every recorded step (largest excess " +
                sci(worst_bound) + ", rounding allowance 1e-12)"};
}

Outcome coexistence() {
    SimulationOptions o;
    o.tol = 1e-13;
    o.stride = 1'000'000;
    int ok = 0, total = 0;
    std::string notes;
    for (const auto& [k, h] : std::vector<std::pair<Index, double>>{{5, 0.01}, {3, 0.01}, {7, 0.02}}) {
        ++total;
        const MultiVirusScenario s = fx::mirrored_pair(k, h);
        const TwoVirusReport rep = two_virus_analysis(s);
        const Trajectory t = simulate_multi(s, o);
        const double x1 = averages(t.limit[0]).first, x2 = averages(t.limit[1]).first;
        const bool pass = validate(s).endemic_ready() && std::abs(rep.r0[0] - rep.r0[1]) < 1e-12 * rep.r0[0] &&
                          rep.r0[0] > 1.0 && rep.verdict == TwoVirusVerdict::coexistence_possible && t.converged &&
                          x1 > 0.01 && x2 > 0.01;
        if (pass) ++ok;
        notes += " n=" + std::to_string(2 * k) + ": xbar=(" + sci(x1) + ", " + sci(x2) + "), " + to_string(rep.verdict) + ";";
    }
    return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " mirrored pairs coexist;" + notes};
}

Outcome time_varying_healthy() {
    SimulationOptions o;
    o.max_steps = 1'000'000;
    o.tol = 1e-14;
    o.stride = 1'000'000;
    int ok = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 401; seed <= 420; ++seed) {
        const ScenarioFile f = fx::standard_network(seed, Target::subcritical);
        const SpreadingParams a = fx::single_params(f);
        PortableRng rng(seed);
        SpreadingParams b = a;
        const double shrink = rng.uniform(0.3, 1.0);
        b.B *= shrink;
        b.B_w *= shrink;
        b.D *= rng.uniform(1.0, 2.0);
        const ParameterSchedule sched =
            seed % 2 == 0 ? ParameterSchedule::random_switching(a, b, 10'000, 50'000, 200'000, seed)
                          : ParameterSchedule::periodic({{0, a}, {7, b}}, 20);
        const Classification c = classify_tv(sched, f.h, envelope(sched));
        const Trajectory t = simulate(half_state(a.n(), a.m()), sched, f.h, o);
        worst = std::max(worst, t.limit[0].max_norm());
        if (c.regime == Regime::healthy_gas && c.s1 <= 1.0 && t.limit[0].max_norm() < 1e-8) ++ok;
    }

    // Counterexample: each piece subcritical, alternation is not.
    const auto [pa, pb] = fx::switching_counterexample();
    const double h = 0.01;
    const ParameterSchedule alt = ParameterSchedule::periodic({{0, pa}, {1, pb}}, 2);
    const Classification c = classify_tv(alt, h, envelope(alt));
    const double s1a = s1_shifted(assemble_full(pa, h)), s1b = s1_shifted(assemble_full(pb, h));
    SimulationOptions co;
    co.max_steps = 200'000;
    co.stride = 1'000'000;
    const Trajectory t = simulate(half_state(2, 1), alt, h, co);
    const bool counter = s1a < 1.0 && s1b < 1.0 && c.s1 > 1.0 && c.regime == Regime::indeterminate && !t.converged &&
                         t.limit[0].max_norm() > 0.01;
    return {ok == 20 && counter,
            std::to_string(ok) + "/20 switching schedules with envelope s1 <= 1 reach max-norm < 1e-8 (worst " +
                sci(worst) + "); counterexample: piece s1 = " + sci(s1a) + ", " + sci(s1b) + ", envelope s1 = " +
                sci(c.s1) + ", final max-norm after 2e5 steps " + sci(t.limit[0].max_norm()) +
                (counter ? " (no convergence, as required)" : " (UNEXPECTED)")};
}

Outcome omega_switching() {
    PortableRng rng(4242);
    SimulationOptions o;
    o.tol = 1e-13;
    o.stride = 1'000'000;
    const double h = 0.01;
    const std::vector<double> scales{0.5, 1.0, 1.5, 2.0, 3.0};
    int ok = 0, runs = 0;
    double worst = 0.0;
    for (int fam_i = 0; fam_i < 5; ++fam_i) {
        const Index n = 2 + static_cast<Index>(rng.index(5));
        const Index m = 1 + static_cast<Index>(rng.index(3));
        HomogeneousRates base;
        base.beta = base.c = rng.uniform(0.05, 0.5);
        base.delta_w = rng.uniform(0.1, 1.0);
        const double x_target = rng.uniform(0.2, 0.8);
        const double c_hat = base.c / base.delta_w;
        base.delta = (1.0 - x_target) * static_cast<double>(n) * base.beta * (1.0 + static_cast<double>(m) * c_hat);
        const OmegaFamily fam = omega_family(x_target, n, m, base, scales, h, 500);
        State z0{Vector(n), Vector(m)};
        for (Index i = 0; i < n; ++i) z0.x(i) = rng.uniform01();
        for (Index j = 0; j < m; ++j) z0.w(j) = rng.uniform01() * static_cast<double>(n) * c_hat;

        std::vector<ParameterSchedule> schedules{fam.schedule};
        if (fam.accepted.size() >= 2) {
            const auto& pieces = fam.schedule.pieces();
            schedules.push_back(ParameterSchedule::random_switching(pieces[0].params, pieces.back().params, 10'000,
                                                                    50'000, 200'000, 99 + static_cast<unsigned>(fam_i)));
        }
        for (const auto& sched : schedules) {
            ++runs;
            const Trajectory t = simulate(z0, sched, h, o);
            const double d = t.limit[0].max_abs_diff(fam.z_star);
            worst = std::max(worst, d);
            if (t.converged && d < 1e-6 && fam.accepted.size() >= 2) ++ok;
        }
    }
    return {ok == runs, std::to_string(ok) + "/" + std::to_string(runs) +
                            " periodic and random switching runs within 1e-6 of the shared equilibrium; worst " + sci(worst)};
}

Outcome error_dynamics() {
    int ok = 0;
    double worst_fixed = 0.0, worst_step = 0.0;
    for (const ScenarioFile& f : supercritical_pool()) {
        const SpreadingParams p = fx::single_params(f);
        const FullSystem full = assemble_full(p, f.h);
        const State zs = *endemic_fixed_point(full).z_star;
        const ErrorDynamics e = error_matrices(full, zs);
        const double fixed = (e.F * e.mu - e.mu).cwiseAbs().maxCoeff();
        double step = 0.0;
        State z = f.viruses[0].initial;
        for (int t = 0; t < 20; ++t) {
            const State next = step_single(z, p, f.h);
            const Vector predicted = e.phi(z.x) * (z.stacked() - zs.stacked());
            step = std::max(step, (predicted - (next.stacked() - zs.stacked())).cwiseAbs().maxCoeff());
            z = next;
        }
        worst_fixed = std::max(worst_fixed, fixed);
        worst_step = std::max(worst_step, step);
        if (fixed < 1e-9 && step < 1e-12) ++ok;
    }
    return {ok == 50, std::to_string(ok) + "/50; worst |F mu - mu| " + sci(worst_fixed) +
                          ", worst error-step mismatch over 20 steps " + sci(worst_step)};
}

Outcome discrete_continuous() {
    int ok = 0, total = 0;
    double worst = 0.0;
    const auto& sub = subcritical_pool();
    for (std::size_t i = 0; i < sub.size(); ++i) {
        const SpreadingParams p = fx::single_params(sub[i]);
        const Trajectory c = reference_continuous(half_state(p.n(), p.m()), p, sub[i].h, 1e4, 1, 1e-15, 1'000'000);
        const double d = c.limit[0].max_abs_diff(healthy_limits.at(i));
        worst = std::max(worst, d);
        ++total;
        if (d < 1e-5) ++ok;
    }
    const auto& mixed = mixed_pool();
    for (std::size_t i = 0; i < mixed.size(); ++i) {
        const Trajectory c = reference_continuous_multi(mixed[i].scenario(), 1e5, 1, 1e-15, 10'000'000);
        double d = 0.0;
        for (std::size_t k = 0; k < 2; ++k) d = std::max(d, c.limit[k].max_abs_diff(winner_limits.at(i)[k]));
        worst = std::max(worst, d);
        ++total;
        if (d < 1e-5) ++ok;
    }
    return {ok == total, std::to_string(ok) + "/" + std::to_string(total) +
                             " continuous limits within 1e-5 of the discrete ones; worst " + sci(worst)};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"healthy-state convergence", healthy_convergence},
        {"endemic convergence", endemic_convergence},
        {"homogeneous closed form", homogeneous_closed_form},
        {"local convergence rate", local_rate},
        {"threshold equivalence", threshold_equivalence},
        {"reproduction-number monotonicity", r0_monotonicity},
        {"sensitivity signs", sensitivity_signs},
        {"multi-virus winner takes all", winner_takes_all},
        {"coexistence", coexistence},
        {"time-varying healthy state", time_varying_healthy},
        {"equilibrium-preserving switching", omega_switching},
        {"error-dynamics consistency", error_dynamics},
        {"discrete/continuous agreement", discrete_continuous},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!r.pass) ++failed;
        char id[24];
        std::snprintf(id, sizeof id, "%02zu", i + 1);
        std::cout << (r.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << r.detail << " ("
                  << sci(secs) << " s)" << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
