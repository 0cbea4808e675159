#pragma once

#include "siws/analysis.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>

namespace siws {

/// Malformed scenario text (bad JSON, missing or non-finite fields).
class FormatError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A file could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kRngAlgorithm = "mt19937_64";

struct VirusSpec {
    ParameterSchedule::Mode mode = ParameterSchedule::Mode::constant;
    long period = 0; // periodic only
    std::vector<ParameterSchedule::Piece> pieces;
    State initial;

    ParameterSchedule schedule() const;
    bool operator==(const VirusSpec& o) const;
};

/// On-disk scenario: l viruses on a shared (n, m) layered network.
struct ScenarioFile {
    int schema_version = kSchemaVersion;
    Index n = 0;
    Index m = 0;
    double h = 0.0;
    std::string rng_algorithm = kRngAlgorithm;
    std::uint64_t seed = 0;
    std::string target; // generator target, empty for hand-written files
    std::vector<VirusSpec> viruses;

    std::size_t l() const { return viruses.size(); }
    bool time_varying() const;

    /// Time-invariant view using each virus's first piece.
    MultiVirusScenario scenario() const;
    std::vector<ParameterSchedule> schedules() const;
    ValidationReport validate() const;

    bool operator==(const ScenarioFile& o) const;
};

nlohmann::json to_json(const ScenarioFile& s);
ScenarioFile scenario_from_json(const nlohmann::json& j);

std::string serialize(const ScenarioFile& s);
ScenarioFile parse_scenario(const std::string& text);

ScenarioFile load_scenario(const std::string& path);
void save_scenario(const ScenarioFile& s, const std::string& path);

/// Single-virus, time-invariant scenario file.
ScenarioFile make_scenario(const SpreadingParams& params, const State& z0, double h);
ScenarioFile make_scenario(const MultiVirusScenario& scenario);

// ---------------------------------------------------------------- generator

enum class Target { subcritical, supercritical, mixed };

const char* to_string(Target t);
Target parse_target(const std::string& s);

/// Portable draws from mt19937_64: the output sequence of the engine is
/// fixed by the standard, and the mapping to doubles below is ours.
class PortableRng {
public:
    explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; } // (0, 1]
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    std::size_t index(std::size_t count) {
        return std::min(count - 1, static_cast<std::size_t>(uniform01() * static_cast<double>(count)));
    }
    bool bernoulli(double p) { return uniform01() <= p; }

private:
    std::mt19937_64 engine_;
};

struct GeneratorOptions {
    double edge_probability = 0.3; // extra edges beyond the spanning cycle
    double rate_floor = 0.1;       // healing and decay rates drawn from [floor, 1]
    int max_attempts = 200;
};

/// Random time-invariant scenario on a strongly connected layered network.
///
/// Population edges: a random Hamiltonian cycle, self-loops and extra edges
/// with probability `edge_probability`; every resource is contaminated by
/// and infects at least one population node. Weights are uniform on (0, 1].
/// B and B_w are then scaled by a common factor found by bisection so that
/// s1(B_f - D_f) hits a random target in the requested regime:
/// subcritical in [-0.8, -0.2] * min(D_f), supercritical in [0.2, 1] * max(D).
/// `mixed` makes virus 1 supercritical and the rest subcritical.
/// Draws are repeated until every assumption (and A6 for supercritical
/// viruses) holds; throws DomainError when the attempt budget runs out.
ScenarioFile generate_random(Index n, Index m, std::size_t l, double h, std::uint64_t seed, Target target,
                             const GeneratorOptions& opts = {});

// ---------------------------------------------------------------- output

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// step, x{k}_{i}, w{k}_{j} per virus, then xbar{k}, wbar{k} per virus (1-based).
std::string csv_header(std::size_t l, Index n, Index m);

void write_csv(std::ostream& os, const Trajectory& traj);

nlohmann::json report_json(const ValidationReport& r);
nlohmann::json report_json(const EquilibriumResult& r);
nlohmann::json report_json(const Classification& c);
nlohmann::json report_json(const TwoVirusReport& r);
nlohmann::json state_json(const State& z);

// ---------------------------------------------------------------- sweeps

/// One-parameter sweep over a base scenario.
///
/// Axis paths (indices 1-based): `h`, `viruses.K.beta_scale`,
/// `viruses.K.delta_scale`, `viruses.K.B.I.J`, `viruses.K.B_w.I.J`,
/// `viruses.K.C_w.I.J`, `viruses.K.D.I`, `viruses.K.D_w.I`,
/// `viruses.K.x0.I`, `viruses.K.w0.I`. Parameter paths act on every piece
/// of the virus's schedule. Scales multiply the base value.
/// Metrics: r0, s1 (per virus, first piece), steps, converged, xbar, wbar,
/// limit (full per-virus limit state).
struct SweepSpec {
    ScenarioFile base;
    std::string axis;
    std::vector<double> values;
    std::vector<std::string> metrics{"r0", "s1", "steps", "converged", "xbar", "wbar"};
};

/// Throws std::invalid_argument when the path does not resolve.
void apply_axis(ScenarioFile& s, const std::string& axis, double value);

struct SweepTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows; // ordered like spec.values
};

/// Runs the sweep on up to `workers` threads (0: hardware concurrency).
/// Values whose scenario fails validation get status "invalid" and empty
/// metric cells.
SweepTable run_sweep(const SweepSpec& spec, const SimulationOptions& sim, unsigned workers = 0);

void write_csv(std::ostream& os, const SweepTable& table);

} // namespace siws
