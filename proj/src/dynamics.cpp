#include "siws/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace siws {

namespace {

void check_single_domain(const State& z) {
    for (Index i = 0; i < z.x.size(); ++i)
        if (!(z.x(i) >= 0.0 && z.x(i) <= 1.0))
            throw DomainError("state outside domain: x at node " + std::to_string(i + 1) + " is " +
                              std::to_string(z.x(i)));
    for (Index j = 0; j < z.w.size(); ++j)
        if (!(z.w(j) >= 0.0) || !std::isfinite(z.w(j)))
            throw DomainError("state outside domain: w at resource " + std::to_string(j + 1) + " is " +
                              std::to_string(z.w(j)));
}

// out may not alias z.
void step_into(const State& z, const SpreadingParams& p, double h, State& out, Vector& pressure) {
    pressure.noalias() = p.B * z.x;
    pressure.noalias() += p.B_w * z.w;
    out.x.array() = z.x.array() * (1.0 - h * p.D.array()) + h * (1.0 - z.x.array()) * pressure.array();
    out.w.noalias() = h * (p.C_w * z.x);
    out.w.array() += z.w.array() * (1.0 - h * p.D_w.array());
}

void step_multi_into(std::span<const State> z, std::span<const SpreadingParams* const> p, double h,
                     std::vector<State>& out, Vector& susceptible, Vector& pressure) {
    const Index n = z[0].x.size();
    susceptible.setOnes(n);
    for (const State& s : z) susceptible -= s.x;
    for (std::size_t k = 0; k < z.size(); ++k) {
        const SpreadingParams& q = *p[k];
        pressure.noalias() = q.B * z[k].x;
        pressure.noalias() += q.B_w * z[k].w;
        out[k].x.array() =
            z[k].x.array() * (1.0 - h * q.D.array()) + h * susceptible.array() * pressure.array();
        out[k].w.noalias() = h * (q.C_w * z[k].x);
        out[k].w.array() += z[k].w.array() * (1.0 - h * q.D_w.array());
    }
}

void check_multi_domain(std::span<const State> z) {
    if (z.empty()) throw DimensionError("step_multi: no viruses");
    const Index n = z[0].x.size();
    for (const State& s : z) {
        if (s.x.size() != n) throw DimensionError("step_multi: viruses disagree on n");
        check_single_domain(s);
    }
    for (Index i = 0; i < n; ++i) {
        double total = 0.0;
        for (const State& s : z) total += s.x(i);
        if (total > 1.0)
            throw DomainError("co-infection sum at node " + std::to_string(i + 1) + " is " + std::to_string(total));
    }
}

long auto_stride(const SimulationOptions& o) {
    if (o.stride > 0) return o.stride;
    if (o.max_steps <= 10'000) return 1;
    return (o.max_steps + 9'999) / 10'000;
}

void check_options(const SimulationOptions& o) {
    if (!(o.tol > 0.0)) throw std::invalid_argument("simulate: tol must be positive");
    if (o.max_steps < 0) throw std::invalid_argument("simulate: max_steps must be nonnegative");
}

// When do successive-difference tests count as convergence?
struct SettleRule {
    long from = 0;   // only at or after this step
    long window = 1; // consecutive small steps required
};

SettleRule settle_rule(std::span<const ParameterSchedule* const> schedules) {
    SettleRule r;
    for (const ParameterSchedule* s : schedules) {
        const long settled = s->settled_from();
        if (settled >= 0) {
            r.from = std::max(r.from, settled);
        } else if (s->mode() == ParameterSchedule::Mode::periodic) {
            r.window = std::max(r.window, s->period());
        }
    }
    return r;
}

void check_against_w_max(const State& z, double w_max, std::size_t k) {
    for (Index j = 0; j < z.w.size(); ++j)
        if (z.w(j) > w_max)
            throw DomainError("virus " + std::to_string(k + 1) + ": w at resource " + std::to_string(j + 1) +
                              " exceeds w_max");
}

std::vector<Vector> field_multi(const std::vector<Vector>& z, const MultiVirusScenario& s) {
    const Index n = s.n(), m = s.m();
    Vector susceptible = Vector::Ones(n);
    for (const Vector& zk : z) susceptible -= zk.head(n);
    std::vector<Vector> dz(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        const SpreadingParams& p = s.viruses[k];
        const auto x = z[k].head(n);
        const auto w = z[k].tail(m);
        dz[k].resize(n + m);
        dz[k].head(n).array() = susceptible.array() * (p.B * x + p.B_w * w).array() - p.D.array() * x.array();
        dz[k].tail(m).array() = (p.C_w * x).array() - p.D_w.array() * w.array();
    }
    return dz;
}

} // namespace

// ---------------------------------------------------------------- schedule

ParameterSchedule ParameterSchedule::constant(SpreadingParams params) {
    params.check_shapes();
    ParameterSchedule s;
    s.mode_ = Mode::constant;
    s.pieces_.push_back({0, std::move(params)});
    return s;
}

ParameterSchedule ParameterSchedule::piecewise(std::vector<Piece> pieces) {
    if (pieces.empty()) throw std::invalid_argument("schedule: no pieces");
    if (pieces.front().start != 0) throw std::invalid_argument("schedule: first piece must start at step 0");
    for (std::size_t i = 1; i < pieces.size(); ++i)
        if (pieces[i].start <= pieces[i - 1].start)
            throw std::invalid_argument("schedule: piece starts must be strictly increasing");
    for (const auto& p : pieces) {
        p.params.check_shapes();
        if (p.params.n() != pieces[0].params.n() || p.params.m() != pieces[0].params.m())
            throw DimensionError("schedule: pieces disagree on (n, m)");
    }
    ParameterSchedule s;
    s.mode_ = pieces.size() == 1 ? Mode::constant : Mode::piecewise;
    s.pieces_ = std::move(pieces);
    return s;
}

ParameterSchedule ParameterSchedule::periodic(std::vector<Piece> pieces, long period) {
    ParameterSchedule s = piecewise(std::move(pieces));
    if (period <= s.pieces_.back().start)
        throw std::invalid_argument("schedule: period must exceed the last piece start");
    s.mode_ = Mode::periodic;
    s.period_ = period;
    return s;
}

ParameterSchedule ParameterSchedule::callback(Callback fn, long sample_steps) {
    if (!fn) throw std::invalid_argument("schedule: empty callback");
    if (sample_steps < 1) throw std::invalid_argument("schedule: callback needs at least one sample step");
    ParameterSchedule s;
    s.mode_ = Mode::callback;
    s.callback_ = std::move(fn);
    s.sample_steps_ = sample_steps;
    s.callback_(0).check_shapes();
    return s;
}

ParameterSchedule ParameterSchedule::random_switching(const SpreadingParams& a, const SpreadingParams& b,
                                                      long dwell_min, long dwell_max, long horizon,
                                                      std::uint64_t seed) {
    if (dwell_min < 1 || dwell_max < dwell_min) throw std::invalid_argument("random_switching: bad dwell range");
    std::mt19937_64 rng(seed);
    const auto span = static_cast<std::uint64_t>(dwell_max - dwell_min + 1);
    std::vector<Piece> pieces;
    long t = 0;
    bool use_a = true;
    while (t < std::max(horizon, 1L)) {
        pieces.push_back({t, use_a ? a : b});
        t += dwell_min + static_cast<long>(rng() % span);
        use_a = !use_a;
    }
    return piecewise(std::move(pieces));
}

const SpreadingParams& ParameterSchedule::at(long step) const {
    if (mode_ == Mode::callback) return callback_(step);
    long t = step;
    if (mode_ == Mode::periodic) t = step % period_;
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                               [](long v, const Piece& p) { return v < p.start; });
    return std::prev(it)->params;
}

std::vector<const SpreadingParams*> ParameterSchedule::samples() const {
    std::vector<const SpreadingParams*> out;
    if (mode_ == Mode::callback) {
        for (long t = 0; t < sample_steps_; ++t) out.push_back(&callback_(t));
    } else {
        for (const auto& p : pieces_) out.push_back(&p.params);
    }
    return out;
}

long ParameterSchedule::settled_from() const {
    switch (mode_) {
    case Mode::constant: return 0;
    case Mode::piecewise: return pieces_.back().start;
    case Mode::periodic: return pieces_.size() == 1 ? 0 : -1;
    case Mode::callback: return -1;
    }
    return -1;
}

Index ParameterSchedule::n() const { return mode_ == Mode::callback ? callback_(0).n() : pieces_[0].params.n(); }
Index ParameterSchedule::m() const { return mode_ == Mode::callback ? callback_(0).m() : pieces_[0].params.m(); }

const char* to_string(ParameterSchedule::Mode mode) {
    switch (mode) {
    case ParameterSchedule::Mode::constant: return "constant";
    case ParameterSchedule::Mode::piecewise: return "piecewise";
    case ParameterSchedule::Mode::periodic: return "periodic";
    case ParameterSchedule::Mode::callback: return "callback";
    }
    return "?";
}

const char* to_string(StopReason r) { return r == StopReason::tolerance ? "tolerance" : "max-steps"; }

// ---------------------------------------------------------------- steppers

State step_single(const State& z, const SpreadingParams& params, double h) {
    params.check_shapes();
    if (z.x.size() != params.n() || z.w.size() != params.m()) throw DimensionError("step_single: state shape");
    check_single_domain(z);
    State out = State::zero(params.n(), params.m());
    Vector pressure(params.n());
    step_into(z, params, h, out, pressure);
    return out;
}

std::vector<State> step_multi(std::span<const State> states, std::span<const SpreadingParams* const> params,
                              double h) {
    if (states.size() != params.size()) throw DimensionError("step_multi: one parameter set per virus required");
    check_multi_domain(states);
    for (std::size_t k = 0; k < states.size(); ++k) {
        params[k]->check_shapes();
        if (states[k].x.size() != params[k]->n() || states[k].w.size() != params[k]->m())
            throw DimensionError("step_multi: state shape of virus " + std::to_string(k + 1));
    }
    std::vector<State> out(states.begin(), states.end());
    Vector susceptible, pressure;
    step_multi_into(states, params, h, out, susceptible, pressure);
    return out;
}

std::vector<State> step_multi(std::span<const State> states, const MultiVirusScenario& scenario) {
    std::vector<const SpreadingParams*> p;
    for (const auto& v : scenario.viruses) p.push_back(&v);
    return step_multi(states, p, scenario.h);
}

// ---------------------------------------------------------------- simulation

Trajectory simulate(const State& z0, const ParameterSchedule& schedule, double h, const SimulationOptions& opts) {
    MultiVirusScenario s;
    s.h = h;
    s.viruses.push_back(schedule.at(0));
    s.initial.push_back(z0);
    return simulate_multi(s, std::span<const ParameterSchedule>(&schedule, 1), opts);
}

Trajectory simulate_multi(const MultiVirusScenario& scenario, std::span<const ParameterSchedule> schedules,
                          const SimulationOptions& opts) {
    check_options(opts);
    scenario.check_shapes();
    const std::size_t l = scenario.l();
    if (schedules.size() != l) throw DimensionError("simulate: one schedule per virus required");

    std::vector<std::vector<const SpreadingParams*>> pieces;
    std::vector<const ParameterSchedule*> sched_ptrs;
    for (const auto& s : schedules) {
        pieces.push_back(s.samples());
        sched_ptrs.push_back(&s);
    }
    const ValidationReport rep = validate_pieces(pieces, scenario.initial, scenario.h);
    if (!rep.passed) throw DomainError("simulate: invalid scenario\n" + rep.summary());
    for (std::size_t k = 0; k < l; ++k) check_against_w_max(scenario.initial[k], rep.w_max[k], k);

    const SettleRule rule = settle_rule(sched_ptrs);
    const long stride = auto_stride(opts);
    const double h = scenario.h;

    Trajectory traj;
    std::vector<State> cur = scenario.initial;
    std::vector<State> next = cur;
    std::vector<const SpreadingParams*> active(l);
    Vector susceptible, pressure;
    traj.snapshots.push_back({0, cur});

    long small_run = 0;
    long t = 0;
    while (t < opts.max_steps) {
        for (std::size_t k = 0; k < l; ++k) active[k] = &schedules[k].at(t);
        if (l == 1) {
            step_into(cur[0], *active[0], h, next[0], pressure);
            check_single_domain(next[0]);
        } else {
            step_multi_into(cur, active, h, next, susceptible, pressure);
            check_multi_domain(next);
        }
        double diff = 0.0;
        for (std::size_t k = 0; k < l; ++k) diff = std::max(diff, next[k].max_abs_diff(cur[k]));
        std::swap(cur, next);
        ++t;
        if (t % stride == 0) traj.snapshots.push_back({t, cur});

        small_run = (diff < opts.tol && t - 1 >= rule.from) ? small_run + 1 : 0;
        if (small_run >= rule.window) {
            traj.converged = true;
            traj.stop = StopReason::tolerance;
            break;
        }
    }
    if (traj.snapshots.back().step != t) traj.snapshots.push_back({t, cur});
    traj.steps = t;
    traj.limit = cur;
    return traj;
}

Trajectory simulate_multi(const MultiVirusScenario& scenario, const SimulationOptions& opts) {
    std::vector<ParameterSchedule> schedules;
    for (const auto& v : scenario.viruses) schedules.push_back(ParameterSchedule::constant(v));
    return simulate_multi(scenario, schedules, opts);
}

// ---------------------------------------------------------------- continuous reference

Trajectory reference_continuous(const State& z0, const SpreadingParams& params, double h, double duration,
                                int substeps, double tol, long stride) {
    MultiVirusScenario s;
    s.h = h;
    s.viruses.push_back(params);
    s.initial.push_back(z0);
    return reference_continuous_multi(s, duration, substeps, tol, stride);
}

Trajectory reference_continuous_multi(const MultiVirusScenario& scenario, double duration, int substeps,
                                      double tol, long stride) {
    if (substeps < 1) throw std::invalid_argument("reference_continuous: substeps must be >= 1");
    if (!(scenario.h > 0.0)) throw std::invalid_argument("reference_continuous: h must be positive");
    if (!(duration >= 0.0)) throw std::invalid_argument("reference_continuous: duration must be nonnegative");
    scenario.check_shapes();
    const Index n = scenario.n();
    const std::size_t l = scenario.l();
    const double dt = scenario.h / substeps;
    const auto records = static_cast<long>(std::llround(duration / scenario.h));
    SimulationOptions rec;
    rec.max_steps = records;
    rec.stride = stride;
    const long every = auto_stride(rec);

    std::vector<Vector> z;
    for (const auto& s : scenario.initial) z.push_back(s.stacked());

    auto to_states = [&](const std::vector<Vector>& v) {
        std::vector<State> out;
        for (const auto& zk : v) out.push_back(State::from_stacked(zk, n));
        return out;
    };
    auto axpy = [](const std::vector<Vector>& a, double c, const std::vector<Vector>& b) {
        std::vector<Vector> out(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + c * b[k];
        return out;
    };

    Trajectory traj;
    traj.snapshots.push_back({0, to_states(z)});
    long r = 0;
    while (r < records) {
        const std::vector<Vector> before = z;
        for (int s = 0; s < substeps; ++s) {
            const auto k1 = field_multi(z, scenario);
            const auto k2 = field_multi(axpy(z, dt / 2, k1), scenario);
            const auto k3 = field_multi(axpy(z, dt / 2, k2), scenario);
            const auto k4 = field_multi(axpy(z, dt, k3), scenario);
            for (std::size_t k = 0; k < l; ++k) z[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
        ++r;
        if (r % every == 0) traj.snapshots.push_back({r, to_states(z)});
        if (tol > 0.0) {
            double diff = 0.0;
            for (std::size_t k = 0; k < l; ++k) diff = std::max(diff, (z[k] - before[k]).cwiseAbs().maxCoeff());
            if (diff < tol) {
                traj.converged = true;
                traj.stop = StopReason::tolerance;
                break;
            }
        }
    }
    if (traj.snapshots.back().step != r) traj.snapshots.push_back({r, to_states(z)});
    traj.steps = r;
    traj.limit = to_states(z);
    return traj;
}

std::pair<double, double> averages(const State& z) {
    const double xb = z.x.size() > 0 ? z.x.mean() : 0.0;
    const double wb = z.w.size() > 0 ? z.w.mean() : 0.0;
    return {xb, wb};
}

} // namespace siws
