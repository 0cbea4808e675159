#pragma once

#include "siws/model.hpp"

#include <cstdint>
#include <functional>

namespace siws {

/// Time-indexed source of spreading parameters, sampled at integer steps.
///
/// Pieces are left-continuous and piecewise constant: the piece with the
/// largest start <= t is active at step t. A periodic schedule replays its
/// pieces modulo the period. A callback schedule asks a user function for
/// every step; the function must return a reference that stays valid for
/// the lifetime of the schedule, and bounds are evaluated over its first
/// `sample_steps` values.
class ParameterSchedule {
public:
    enum class Mode { constant, piecewise, periodic, callback };

    struct Piece {
        long start = 0;
        SpreadingParams params;
    };

    using Callback = std::function<const SpreadingParams&(long)>;

    static ParameterSchedule constant(SpreadingParams params);
    static ParameterSchedule piecewise(std::vector<Piece> pieces);
    static ParameterSchedule periodic(std::vector<Piece> pieces, long period);
    static ParameterSchedule callback(Callback fn, long sample_steps);

    /// Piecewise schedule that alternates between `a` and `b` with dwell
    /// times drawn uniformly from [dwell_min, dwell_max] steps until
    /// `horizon` steps are covered. Starts in `a`.
    static ParameterSchedule random_switching(const SpreadingParams& a, const SpreadingParams& b, long dwell_min,
                                              long dwell_max, long horizon, std::uint64_t seed);

    Mode mode() const { return mode_; }
    long period() const { return period_; }
    const std::vector<Piece>& pieces() const { return pieces_; }

    const SpreadingParams& at(long step) const;

    /// Every parameter value the schedule can take (all pieces, or the
    /// sampled callback values).
    std::vector<const SpreadingParams*> samples() const;

    /// First step from which the parameters no longer change; -1 when they
    /// keep changing forever (periodic with several pieces, callback).
    long settled_from() const;

    Index n() const;
    Index m() const;

private:
    Mode mode_ = Mode::constant;
    long period_ = 0;
    long sample_steps_ = 0;
    std::vector<Piece> pieces_;
    Callback callback_;
};

const char* to_string(ParameterSchedule::Mode mode);

enum class StopReason { tolerance, max_steps };

const char* to_string(StopReason r);

/// Per-virus states at one recorded step.
struct Snapshot {
    long step = 0;
    std::vector<State> states;
};

struct Trajectory {
    std::vector<Snapshot> snapshots; // every stride-th step plus the last one
    long steps = 0;
    bool converged = false;
    std::vector<State> limit;
    StopReason stop = StopReason::max_steps;
};

struct SimulationOptions {
    long max_steps = 10'000'000;
    double tol = 1e-10; // max-norm of successive differences
    long stride = 0;    // 0: every step up to 1e4 steps, otherwise decimated to ~1e4 records
};

/// One step of the single-virus map
///   x' = (1 - h delta) x + h (1 - x) (B x + B_w w)
///   w' = w + h (C_w x - delta_w w).
/// Throws DomainError if x leaves [0, 1] or w is negative.
State step_single(const State& z, const SpreadingParams& params, double h);

/// One step of the competing-virus map; each virus sees the susceptible
/// fraction 1 - sum_a x^a. Throws DomainError if a co-infection sum
/// exceeds 1.
std::vector<State> step_multi(std::span<const State> states, std::span<const SpreadingParams* const> params,
                              double h);
std::vector<State> step_multi(std::span<const State> states, const MultiVirusScenario& scenario);

Trajectory simulate(const State& z0, const ParameterSchedule& schedule, double h, const SimulationOptions& opts = {});

Trajectory simulate_multi(const MultiVirusScenario& scenario, std::span<const ParameterSchedule> schedules,
                          const SimulationOptions& opts = {});

/// Time-invariant multi-virus run using the scenario's own parameters.
Trajectory simulate_multi(const MultiVirusScenario& scenario, const SimulationOptions& opts = {});

/// Classical RK4 integration of the continuous-time field
///   dz/dt = (-D_f + (I - Z) B_f) z
/// with step h / substeps. Records at multiples of h so that record k lines
/// up with discrete step k; stops early when the change over one h-interval
/// is below tol. `duration` is in model time (discrete step k sits at k*h).
/// `stride` decimates the records like SimulationOptions::stride.
Trajectory reference_continuous(const State& z0, const SpreadingParams& params, double h, double duration,
                                int substeps, double tol = 0.0, long stride = 0);

/// Multi-virus counterpart of reference_continuous.
Trajectory reference_continuous_multi(const MultiVirusScenario& scenario, double duration, int substeps,
                                      double tol = 0.0, long stride = 0);

/// Per-virus averages (mean x, mean w).
std::pair<double, double> averages(const State& z);

} // namespace siws
