// siws command-line entry point.
//
// Exit codes: 0 success, 1 invalid input or failed validation, 2 usage
// error (unknown subcommand, bad flags), 3 I/O failure.

#include "siws/scenario.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using nlohmann::json;
using namespace siws;

constexpr int kExitInvalid = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct Flags {
    std::string scenario;
    std::string out;
    long steps = 0;
    double tol = 0.0;
    long stride = 0;
    std::uint64_t seed = 0;
    bool strict = false;

    // generate
    long n = 15, m = 2, l = 1;
    double h = 0.01;
    std::string target = "supercritical";

    // sweep
    std::string axis;
    std::vector<double> values;
    std::vector<std::string> metrics;
    unsigned workers = 0;
};

struct ValidationFailed {
    ValidationReport report;
};

// Writes to --out, or stdout when it is empty.
void emit(const Flags& f, const std::string& text) {
    if (f.out.empty()) {
        std::cout << text;
        std::cout.flush();
        if (!std::cout) throw IoError("error writing to stdout");
        return;
    }
    std::ofstream out(f.out, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + f.out + "' for writing");
    out << text;
    if (!out) throw IoError("error writing '" + f.out + "'");
}

ScenarioFile load(const Flags& f, bool require_valid) {
    if (f.scenario.empty()) throw std::invalid_argument("--scenario is required");
    ScenarioFile s = load_scenario(f.scenario);
    const ValidationReport rep = s.validate();
    if (!rep.passed) {
        if (require_valid || f.strict) throw ValidationFailed{rep};
        std::cerr << "warning: scenario fails validation\n" << rep.summary();
    }
    return s;
}

SimulationOptions sim_options(const Flags& f) {
    SimulationOptions o;
    if (f.steps > 0) o.max_steps = f.steps;
    if (f.tol > 0.0) o.tol = f.tol;
    if (f.stride > 0) o.stride = f.stride;
    return o;
}

int cmd_validate(const Flags& f) {
    if (f.scenario.empty()) throw std::invalid_argument("--scenario is required");
    const ScenarioFile s = load_scenario(f.scenario);
    const ValidationReport rep = s.validate();
    emit(f, report_json(rep).dump(2) + "\n");
    if (!rep.passed) return kExitInvalid;
    if (f.strict && !rep.endemic_violations.empty()) return kExitInvalid;
    return 0;
}

json perron_json(const PerronData& p) {
    json right = json::array(), left = json::array();
    for (Index i = 0; i < p.right.size(); ++i) right.push_back(p.right(i));
    for (Index i = 0; i < p.left.size(); ++i) left.push_back(p.left(i));
    return {{"rho", p.rho}, {"right", right}, {"left", left}, {"iterations", p.iterations}, {"residual", p.residual}};
}

int cmd_spectrum(const Flags& f) {
    const ScenarioFile s = load(f, false);
    json out = json::array();
    for (std::size_t k = 0; k < s.l(); ++k) {
        json pieces = json::array();
        for (const auto& piece : s.viruses[k].pieces) {
            const FullSystem full = assemble_full(piece.params, s.h);
            const Matrix M = full.D_f.cwiseInverse().asDiagonal() * full.B_f;
            pieces.push_back({{"start", piece.start},
                              {"r0", reproduction_number(full)},
                              {"s1", s1_shifted(full)},
                              {"perron", perron_json(spectral_radius(M))}});
        }
        out.push_back({{"virus", k + 1}, {"pieces", pieces}});
    }
    emit(f, out.dump(2) + "\n");
    return 0;
}

int cmd_simulate(const Flags& f) {
    const ScenarioFile s = load(f, true);
    const Trajectory traj = simulate_multi(s.scenario(), s.schedules(), sim_options(f));
    std::ostringstream csv;
    write_csv(csv, traj);
    emit(f, csv.str());
    json summary = {{"steps", traj.steps}, {"converged", traj.converged}, {"stop", to_string(traj.stop)}};
    (f.out.empty() ? std::cerr : std::cout) << summary.dump() << "\n";
    return 0;
}

int cmd_equilibrium(const Flags& f) {
    const ScenarioFile s = load(f, false);
    FixedPointOptions opts;
    if (f.tol > 0.0) opts.tol = f.tol;
    if (f.steps > 0) opts.max_iterations = f.steps;
    json out = json::array();
    for (std::size_t k = 0; k < s.l(); ++k) {
        json r = report_json(endemic_fixed_point(assemble_full(s.viruses[k].pieces[0].params, s.h), opts));
        r["virus"] = k + 1;
        out.push_back(std::move(r));
    }
    emit(f, out.dump(2) + "\n");
    return 0;
}

int cmd_classify(const Flags& f) {
    const ScenarioFile s = load(f, false);
    json out;
    json per_virus = json::array();
    for (std::size_t k = 0; k < s.l(); ++k) {
        const ParameterSchedule sched = s.viruses[k].schedule();
        const Classification c = s.viruses[k].pieces.size() > 1
                                     ? classify_tv(sched, s.h, envelope(sched))
                                     : classify_single(assemble_full(s.viruses[k].pieces[0].params, s.h));
        json j = report_json(c);
        j["virus"] = k + 1;
        per_virus.push_back(std::move(j));
    }
    out["viruses"] = per_virus;
    if (s.l() == 2 && s.m == 1 && !s.time_varying()) out["two_virus"] = report_json(two_virus_analysis(s.scenario()));
    emit(f, out.dump(2) + "\n");
    return 0;
}

int cmd_sweep(const Flags& f) {
    SweepSpec spec;
    spec.base = load(f, false);
    if (f.axis.empty()) throw std::invalid_argument("--axis is required");
    if (f.values.empty()) throw std::invalid_argument("--values is required");
    spec.axis = f.axis;
    spec.values = f.values;
    if (!f.metrics.empty()) spec.metrics = f.metrics;
    const SweepTable table = run_sweep(spec, sim_options(f), f.workers);
    std::ostringstream csv;
    write_csv(csv, table);
    emit(f, csv.str());
    return 0;
}

int cmd_generate(const Flags& f) {
    if (f.n < 1 || f.m < 1 || f.l < 1) throw std::invalid_argument("--n, --m and --l must be at least 1");
    const ScenarioFile s = generate_random(f.n, f.m, static_cast<std::size_t>(f.l), f.h, f.seed, parse_target(f.target));
    emit(f, serialize(s));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-time layered-network SIWS epidemics"};
    app.require_subcommand(1);
    Flags f;

    auto common = [&](CLI::App* c, bool needs_scenario) {
        auto* opt = c->add_option("--scenario", f.scenario, "Scenario file (JSON)");
        if (needs_scenario) opt->required();
        c->add_option("--out", f.out, "Output path (default: stdout)");
        c->add_option("--steps", f.steps, "Maximum steps or iterations")->check(CLI::PositiveNumber);
        c->add_option("--tol", f.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
        c->add_option("--stride", f.stride, "Record every K-th state")->check(CLI::PositiveNumber);
        c->add_option("--seed", f.seed, "Random seed");
        c->add_flag("--strict", f.strict, "Abort on any validation failure");
    };

    auto* validate = app.add_subcommand("validate", "Check every model assumption");
    auto* spectrum = app.add_subcommand("spectrum", "Reproduction numbers, s1 and Perron vectors");
    auto* simulate = app.add_subcommand("simulate", "Run the discrete map and write a CSV trajectory");
    auto* equilibrium = app.add_subcommand("equilibrium", "Endemic equilibrium per virus");
    auto* classify = app.add_subcommand("classify", "Stability regime per virus and two-virus verdict");
    auto* sweep = app.add_subcommand("sweep", "Metrics over one parameter axis");
    auto* generate = app.add_subcommand("generate", "Random scenario on a strongly connected network");
    for (auto* c : {validate, spectrum, simulate, equilibrium, classify, sweep}) common(c, true);
    common(generate, false);

    sweep->add_option("--axis", f.axis, "Parameter path, e.g. viruses.1.beta_scale")->required();
    sweep->add_option("--values", f.values, "Comma-separated values")->delimiter(',')->required();
    sweep->add_option("--metrics", f.metrics, "r0,s1,steps,converged,xbar,wbar,limit")->delimiter(',');
    sweep->add_option("--workers", f.workers, "Worker threads (0: all cores)");

    generate->add_option("--n", f.n, "Population nodes");
    generate->add_option("--m", f.m, "Resource nodes");
    generate->add_option("--l", f.l, "Viruses");
    generate->set_help_flag("--help", "Print this help message and exit");
    generate->add_option("--h", f.h, "Sampling period")->check(CLI::PositiveNumber);
    generate->add_option("--target", f.target, "subcritical | supercritical | mixed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*validate) return cmd_validate(f);
        if (*spectrum) return cmd_spectrum(f);
        if (*simulate) return cmd_simulate(f);
        if (*equilibrium) return cmd_equilibrium(f);
        if (*classify) return cmd_classify(f);
        if (*sweep) return cmd_sweep(f);
        if (*generate) return cmd_generate(f);
    } catch (const ValidationFailed& v) {
        std::cerr << "error: scenario fails validation\n" << v.report.summary();
        return kExitInvalid;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitUsage;
}
