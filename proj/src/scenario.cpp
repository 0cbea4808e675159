#include "siws/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace siws {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- json helpers

json matrix_json(const Matrix& M) {
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const Vector& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
    return j.at(key);
}

double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw FormatError(where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw FormatError(where + ": number is not finite");
    return v;
}

long integer(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw FormatError(where + ": expected an integer");
    return j.get<long>();
}

Vector parse_vector(const json& j, Index expected, const std::string& where) {
    if (!j.is_array()) throw FormatError(where + ": expected an array");
    if (static_cast<Index>(j.size()) != expected)
        throw DimensionError(where + ": expected " + std::to_string(expected) + " entries, got " +
                             std::to_string(j.size()));
    Vector v(expected);
    for (Index i = 0; i < expected; ++i) v(i) = number(j[i], where + "[" + std::to_string(i) + "]");
    return v;
}

Matrix parse_matrix(const json& j, Index rows, Index cols, const std::string& where) {
    if (!j.is_array()) throw FormatError(where + ": expected an array of rows");
    if (static_cast<Index>(j.size()) != rows)
        throw DimensionError(where + ": expected " + std::to_string(rows) + " rows, got " + std::to_string(j.size()));
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const Vector r = parse_vector(j[i], cols, where + "[" + std::to_string(i) + "]");
        M.row(i) = r.transpose();
    }
    return M;
}

ParameterSchedule::Mode parse_mode(const std::string& s, const std::string& where) {
    if (s == "constant") return ParameterSchedule::Mode::constant;
    if (s == "piecewise") return ParameterSchedule::Mode::piecewise;
    if (s == "periodic") return ParameterSchedule::Mode::periodic;
    throw FormatError(where + ": unknown schedule mode '" + s + "'");
}

// ---------------------------------------------------------------- generator helpers

SpreadingParams draw_network(PortableRng& rng, Index n, Index m, const GeneratorOptions& o) {
    SpreadingParams p;
    p.B = Matrix::Zero(n, n);
    p.B_w = Matrix::Zero(n, m);
    p.C_w = Matrix::Zero(m, n);

    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    for (std::size_t i = 0; i < perm.size(); ++i)
        p.B(perm[(i + 1) % perm.size()], perm[i]) = rng.uniform01();
    for (Index i = 0; i < n; ++i) p.B(i, i) = rng.uniform01();
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (p.B(i, j) == 0.0 && rng.bernoulli(o.edge_probability)) p.B(i, j) = rng.uniform01();

    for (Index j = 0; j < m; ++j) {
        const Index src = static_cast<Index>(rng.index(static_cast<std::size_t>(n)));
        p.C_w(j, src) = rng.uniform01();
        for (Index k = 0; k < n; ++k)
            if (p.C_w(j, k) == 0.0 && rng.bernoulli(o.edge_probability)) p.C_w(j, k) = rng.uniform01();
        const Index dst = static_cast<Index>(rng.index(static_cast<std::size_t>(n)));
        p.B_w(dst, j) = rng.uniform01();
        for (Index i = 0; i < n; ++i)
            if (p.B_w(i, j) == 0.0 && rng.bernoulli(o.edge_probability)) p.B_w(i, j) = rng.uniform01();
    }

    p.D.resize(n);
    p.D_w.resize(m);
    for (Index i = 0; i < n; ++i) p.D(i) = rng.uniform(o.rate_floor, 1.0);
    for (Index j = 0; j < m; ++j) p.D_w(j) = rng.uniform(o.rate_floor, 1.0);
    return p;
}

double abscissa_at(const SpreadingParams& p, double kappa) {
    SpreadingParams q = p;
    q.B *= kappa;
    q.B_w *= kappa;
    const FullSystem f = assemble_full(q, 1.0);
    Matrix A = f.B_f;
    A.diagonal() -= f.D_f;
    return metzler_abscissa(A);
}

// Scales B and B_w so that s1(B_f - D_f) = tau. Requires tau > s1 at kappa = 0.
void hit_target(SpreadingParams& p, double tau) {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; abscissa_at(p, hi) < tau; ++i) {
        if (i == 200) throw DomainError("generate_random: target abscissa unreachable");
        lo = hi;
        hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (abscissa_at(p, mid) < tau ? lo : hi) = mid;
    }
    const double kappa = 0.5 * (lo + hi);
    p.B *= kappa;
    p.B_w *= kappa;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
}

long parse_index(const std::string& s, long upper, const std::string& axis) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 1 || v > upper)
        throw std::invalid_argument("axis '" + axis + "': index '" + s + "' out of range 1.." + std::to_string(upper));
    return v - 1;
}

} // namespace

// ---------------------------------------------------------------- scenario file

ParameterSchedule VirusSpec::schedule() const {
    switch (mode) {
    case ParameterSchedule::Mode::constant: return ParameterSchedule::constant(pieces.at(0).params);
    case ParameterSchedule::Mode::piecewise: return ParameterSchedule::piecewise(pieces);
    case ParameterSchedule::Mode::periodic: return ParameterSchedule::periodic(pieces, period);
    case ParameterSchedule::Mode::callback: break;
    }
    throw std::invalid_argument("VirusSpec: callback schedules cannot be stored");
}

bool VirusSpec::operator==(const VirusSpec& o) const {
    if (mode != o.mode || period != o.period || pieces.size() != o.pieces.size() || !(initial == o.initial))
        return false;
    for (std::size_t i = 0; i < pieces.size(); ++i)
        if (pieces[i].start != o.pieces[i].start || !(pieces[i].params == o.pieces[i].params)) return false;
    return true;
}

bool ScenarioFile::time_varying() const {
    return std::any_of(viruses.begin(), viruses.end(), [](const VirusSpec& v) { return v.pieces.size() > 1; });
}

MultiVirusScenario ScenarioFile::scenario() const {
    MultiVirusScenario s;
    s.h = h;
    for (const VirusSpec& v : viruses) {
        s.viruses.push_back(v.pieces.at(0).params);
        s.initial.push_back(v.initial);
    }
    return s;
}

std::vector<ParameterSchedule> ScenarioFile::schedules() const {
    std::vector<ParameterSchedule> out;
    for (const VirusSpec& v : viruses) out.push_back(v.schedule());
    return out;
}

ValidationReport ScenarioFile::validate() const {
    std::vector<std::vector<const SpreadingParams*>> pieces;
    std::vector<State> initial;
    for (const VirusSpec& v : viruses) {
        std::vector<const SpreadingParams*> ps;
        for (const auto& p : v.pieces) ps.push_back(&p.params);
        pieces.push_back(std::move(ps));
        initial.push_back(v.initial);
    }
    return validate_pieces(pieces, initial, h);
}

bool ScenarioFile::operator==(const ScenarioFile& o) const {
    return schema_version == o.schema_version && n == o.n && m == o.m && h == o.h &&
           rng_algorithm == o.rng_algorithm && seed == o.seed && target == o.target && viruses == o.viruses;
}

json to_json(const ScenarioFile& s) {
    json j;
    j["schema_version"] = s.schema_version;
    j["n"] = s.n;
    j["m"] = s.m;
    j["l"] = s.l();
    j["h"] = s.h;
    j["rng"] = {{"algorithm", s.rng_algorithm}, {"seed", s.seed}};
    if (!s.target.empty()) j["target"] = s.target;
    json viruses = json::array();
    for (const VirusSpec& v : s.viruses) {
        json vj;
        vj["schedule"] = {{"mode", to_string(v.mode)}};
        if (v.mode == ParameterSchedule::Mode::periodic) vj["schedule"]["period"] = v.period;
        json pieces = json::array();
        for (const auto& p : v.pieces) {
            pieces.push_back({{"start", p.start},
                              {"B", matrix_json(p.params.B)},
                              {"B_w", matrix_json(p.params.B_w)},
                              {"C_w", matrix_json(p.params.C_w)},
                              {"D", vector_json(p.params.D)},
                              {"D_w", vector_json(p.params.D_w)}});
        }
        vj["pieces"] = std::move(pieces);
        vj["x0"] = vector_json(v.initial.x);
        vj["w0"] = vector_json(v.initial.w);
        viruses.push_back(std::move(vj));
    }
    j["viruses"] = std::move(viruses);
    return j;
}

ScenarioFile scenario_from_json(const json& j) {
    ScenarioFile s;
    s.schema_version = static_cast<int>(integer(field(j, "schema_version", "scenario"), "schema_version"));
    if (s.schema_version != kSchemaVersion)
        throw FormatError("scenario: unsupported schema_version " + std::to_string(s.schema_version));
    s.n = integer(field(j, "n", "scenario"), "n");
    s.m = integer(field(j, "m", "scenario"), "m");
    const long l = integer(field(j, "l", "scenario"), "l");
    if (s.n < 1 || s.m < 1 || l < 1) throw DimensionError("scenario: n, m and l must be at least 1");
    s.h = number(field(j, "h", "scenario"), "h");
    if (j.contains("rng")) {
        const json& r = j.at("rng");
        const json& alg = field(r, "algorithm", "rng");
        if (!alg.is_string()) throw FormatError("rng.algorithm: expected a string");
        s.rng_algorithm = alg.get<std::string>();
        const json& seed = field(r, "seed", "rng");
        if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
            throw FormatError("rng.seed: expected a nonnegative integer");
        s.seed = seed.get<std::uint64_t>();
    }
    if (j.contains("target")) {
        if (!j.at("target").is_string()) throw FormatError("target: expected a string");
        s.target = j.at("target").get<std::string>();
    }
    const json& viruses = field(j, "viruses", "scenario");
    if (!viruses.is_array() || static_cast<long>(viruses.size()) != l)
        throw DimensionError("scenario: 'viruses' must list l = " + std::to_string(l) + " entries");
    for (std::size_t k = 0; k < viruses.size(); ++k) {
        const std::string where = "viruses[" + std::to_string(k) + "]";
        const json& vj = viruses[k];
        VirusSpec v;
        if (vj.contains("schedule")) {
            const json& sj = vj.at("schedule");
            const json& mode = field(sj, "mode", where + ".schedule");
            if (!mode.is_string()) throw FormatError(where + ".schedule.mode: expected a string");
            v.mode = parse_mode(mode.get<std::string>(), where + ".schedule");
            if (v.mode == ParameterSchedule::Mode::periodic)
                v.period = integer(field(sj, "period", where + ".schedule"), where + ".schedule.period");
        }
        const json& pieces = field(vj, "pieces", where);
        if (!pieces.is_array() || pieces.empty()) throw FormatError(where + ".pieces: expected a nonempty array");
        for (std::size_t p = 0; p < pieces.size(); ++p) {
            const std::string pw = where + ".pieces[" + std::to_string(p) + "]";
            const json& pj = pieces[p];
            ParameterSchedule::Piece piece;
            piece.start = pj.contains("start") ? integer(pj.at("start"), pw + ".start") : 0;
            piece.params.B = parse_matrix(field(pj, "B", pw), s.n, s.n, pw + ".B");
            piece.params.B_w = parse_matrix(field(pj, "B_w", pw), s.n, s.m, pw + ".B_w");
            piece.params.C_w = parse_matrix(field(pj, "C_w", pw), s.m, s.n, pw + ".C_w");
            piece.params.D = parse_vector(field(pj, "D", pw), s.n, pw + ".D");
            piece.params.D_w = parse_vector(field(pj, "D_w", pw), s.m, pw + ".D_w");
            v.pieces.push_back(std::move(piece));
        }
        if (v.mode == ParameterSchedule::Mode::constant && v.pieces.size() != 1)
            throw FormatError(where + ": constant schedule needs exactly one piece");
        v.initial.x = parse_vector(field(vj, "x0", where), s.n, where + ".x0");
        v.initial.w = parse_vector(field(vj, "w0", where), s.m, where + ".w0");
        (void)v.schedule(); // checks piece ordering and period
        s.viruses.push_back(std::move(v));
    }
    return s;
}

std::string serialize(const ScenarioFile& s) { return to_json(s).dump(2) + "\n"; }

ScenarioFile parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("scenario: ") + e.what());
    }
    return scenario_from_json(j);
}

ScenarioFile load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("error reading '" + path + "'");
    return parse_scenario(buf.str());
}

void save_scenario(const ScenarioFile& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << serialize(s);
    if (!out) throw IoError("error writing '" + path + "'");
}

ScenarioFile make_scenario(const SpreadingParams& params, const State& z0, double h) {
    MultiVirusScenario s;
    s.h = h;
    s.viruses.push_back(params);
    s.initial.push_back(z0);
    return make_scenario(s);
}

ScenarioFile make_scenario(const MultiVirusScenario& scenario) {
    scenario.check_shapes();
    ScenarioFile f;
    f.n = scenario.n();
    f.m = scenario.m();
    f.h = scenario.h;
    for (std::size_t k = 0; k < scenario.l(); ++k) {
        VirusSpec v;
        v.pieces.push_back({0, scenario.viruses[k]});
        v.initial = scenario.initial[k];
        f.viruses.push_back(std::move(v));
    }
    return f;
}

// ---------------------------------------------------------------- generator

const char* to_string(Target t) {
    switch (t) {
    case Target::subcritical: return "subcritical";
    case Target::supercritical: return "supercritical";
    case Target::mixed: return "mixed";
    }
    return "?";
}

Target parse_target(const std::string& s) {
    if (s == "subcritical") return Target::subcritical;
    if (s == "supercritical") return Target::supercritical;
    if (s == "mixed") return Target::mixed;
    throw std::invalid_argument("unknown target '" + s + "' (expected subcritical, supercritical or mixed)");
}

ScenarioFile generate_random(Index n, Index m, std::size_t l, double h, std::uint64_t seed, Target target,
                             const GeneratorOptions& opts) {
    if (n < 1 || m < 1 || l < 1) throw DimensionError("generate_random: n, m and l must be at least 1");
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("generate_random: h must be positive");
    if (!(opts.rate_floor > 0.0 && opts.rate_floor <= 1.0))
        throw std::invalid_argument("generate_random: rate_floor must lie in (0, 1]");

    PortableRng rng(seed);
    for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
        MultiVirusScenario s;
        s.h = h;
        bool ok = true;
        for (std::size_t k = 0; k < l && ok; ++k) {
            const bool super = target == Target::supercritical || (target == Target::mixed && k == 0);
            SpreadingParams p = draw_network(rng, n, m, opts);
            const double min_rate = std::min(p.D.minCoeff(), p.D_w.minCoeff());
            const double tau = super ? rng.uniform(0.2, 1.0) * p.D.maxCoeff() : -rng.uniform(0.2, 0.8) * min_rate;
            hit_target(p, tau);

            State z0{Vector(n), Vector(m)};
            for (Index i = 0; i < n; ++i) z0.x(i) = rng.uniform01() / static_cast<double>(l);
            const Vector ceiling = p.D_w.cwiseInverse().cwiseProduct(p.C_w.rowwise().sum());
            for (Index j = 0; j < m; ++j) z0.w(j) = rng.uniform01() * ceiling(j);

            const ValidationReport rep = validate(p, z0, h);
            const double s1 = s1_shifted(assemble_full(p, h));
            ok = rep.passed && (super ? (s1 > 1.0 && rep.endemic_violations.empty()) : s1 <= 1.0);
            s.viruses.push_back(std::move(p));
            s.initial.push_back(std::move(z0));
        }
        if (!ok || !validate(s).passed) continue;

        ScenarioFile f = make_scenario(s);
        f.seed = seed;
        f.target = to_string(target);
        return f;
    }
    throw DomainError("generate_random: requested regime unattainable within " + std::to_string(opts.max_attempts) +
                      " attempts");
}

// ---------------------------------------------------------------- output

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_header(std::size_t l, Index n, Index m) {
    std::string h = "step";
    for (std::size_t k = 1; k <= l; ++k) {
        for (Index i = 1; i <= n; ++i) h += ",x" + std::to_string(k) + "_" + std::to_string(i);
        for (Index j = 1; j <= m; ++j) h += ",w" + std::to_string(k) + "_" + std::to_string(j);
    }
    for (std::size_t k = 1; k <= l; ++k) h += ",xbar" + std::to_string(k) + ",wbar" + std::to_string(k);
    return h;
}

void write_csv(std::ostream& os, const Trajectory& traj) {
    if (traj.snapshots.empty()) throw std::invalid_argument("write_csv: empty trajectory");
    const auto& first = traj.snapshots.front().states;
    os << csv_header(first.size(), first.at(0).x.size(), first.at(0).w.size()) << '\n';
    std::string line;
    for (const Snapshot& s : traj.snapshots) {
        line = std::to_string(s.step);
        for (const State& z : s.states) {
            for (Index i = 0; i < z.x.size(); ++i) (line += ',') += format_double(z.x(i));
            for (Index j = 0; j < z.w.size(); ++j) (line += ',') += format_double(z.w(j));
        }
        for (const State& z : s.states) {
            const auto [xb, wb] = averages(z);
            (line += ',') += format_double(xb);
            (line += ',') += format_double(wb);
        }
        os << line << '\n';
    }
}

json state_json(const State& z) { return {{"x", vector_json(z.x)}, {"w", vector_json(z.w)}}; }

json report_json(const ValidationReport& r) {
    auto list = [](const std::vector<Violation>& vs) {
        json a = json::array();
        for (const Violation& v : vs)
            a.push_back({{"assumption", v.assumption}, {"location", v.location}, {"message", v.message}});
        return a;
    };
    return {{"passed", r.passed},
            {"endemic_ready", r.endemic_ready()},
            {"w_max", r.w_max},
            {"violations", list(r.violations)},
            {"endemic_violations", list(r.endemic_violations)}};
}

json report_json(const EquilibriumResult& r) {
    json j = {{"kind", to_string(r.kind)}, {"residual", r.residual}, {"iterations", r.iterations}};
    j["z_star"] = r.z_star ? state_json(*r.z_star) : json(nullptr);
    return j;
}

json report_json(const Classification& c) {
    json j = {{"regime", to_string(c.regime)},
              {"r0", c.r0},
              {"s1", c.s1},
              {"rate", c.rate},
              {"threshold_consistent", c.threshold_consistent},
              {"assumptions",
               {{"well_defined", c.assumptions.well_defined},
                {"irreducible", c.assumptions.irreducible},
                {"endemic_step", c.assumptions.endemic_step}}}};
    if (!c.piece_r0.empty()) j["piece_r0"] = c.piece_r0;
    return j;
}

json report_json(const TwoVirusReport& r) {
    json j;
    j["r0"] = {r.r0[0], r.r0[1]};
    j["s1"] = {r.s1[0], r.s1[1]};
    j["z_star"] = json::array();
    j["crossed"] = json::array();
    for (int k = 0; k < 2; ++k) {
        j["z_star"].push_back(r.z_star[k] ? state_json(*r.z_star[k]) : json(nullptr));
        j["crossed"].push_back(r.crossed[k] ? json(*r.crossed[k]) : json(nullptr));
    }
    j["dominates"] = {r.dominates[0], r.dominates[1]};
    j["h_bound"] = r.h_bound;
    j["j_abscissa"] = r.j_abscissa;
    j["verdict"] = to_string(r.verdict);
    if (r.verdict == TwoVirusVerdict::winner) j["winner"] = r.winner;
    return j;
}

// ---------------------------------------------------------------- sweeps

void apply_axis(ScenarioFile& s, const std::string& axis, double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("axis '" + axis + "': value must be finite");
    const std::vector<std::string> parts = split(axis, '.');
    if (parts.size() == 1 && parts[0] == "h") {
        s.h = value;
        return;
    }
    if (parts.size() < 3 || parts[0] != "viruses") throw std::invalid_argument("unknown axis '" + axis + "'");
    VirusSpec& v = s.viruses[static_cast<std::size_t>(parse_index(parts[1], static_cast<long>(s.l()), axis))];
    const std::string& f = parts[2];
    const std::size_t extra = parts.size() - 3;
    auto need = [&](std::size_t count) {
        if (extra != count) throw std::invalid_argument("axis '" + axis + "': wrong number of indices");
    };

    if (f == "beta_scale" || f == "delta_scale") {
        need(0);
        for (auto& p : v.pieces) {
            if (f == "beta_scale") {
                p.params.B *= value;
                p.params.B_w *= value;
            } else {
                p.params.D *= value;
            }
        }
    } else if (f == "B" || f == "B_w" || f == "C_w") {
        need(2);
        for (auto& p : v.pieces) {
            Matrix& M = f == "B" ? p.params.B : f == "B_w" ? p.params.B_w : p.params.C_w;
            M(parse_index(parts[3], static_cast<long>(M.rows()), axis),
              parse_index(parts[4], static_cast<long>(M.cols()), axis)) = value;
        }
    } else if (f == "D" || f == "D_w") {
        need(1);
        for (auto& p : v.pieces) {
            Vector& d = f == "D" ? p.params.D : p.params.D_w;
            d(parse_index(parts[3], static_cast<long>(d.size()), axis)) = value;
        }
    } else if (f == "x0" || f == "w0") {
        need(1);
        Vector& z = f == "x0" ? v.initial.x : v.initial.w;
        z(parse_index(parts[3], static_cast<long>(z.size()), axis)) = value;
    } else {
        throw std::invalid_argument("unknown axis '" + axis + "'");
    }
}

SweepTable run_sweep(const SweepSpec& spec, const SimulationOptions& sim, unsigned workers) {
    if (spec.values.empty()) throw std::invalid_argument("sweep: no values");
    static const std::vector<std::string> known{"r0", "s1", "steps", "converged", "xbar", "wbar", "limit"};
    for (const auto& m : spec.metrics)
        if (std::find(known.begin(), known.end(), m) == known.end())
            throw std::invalid_argument("sweep: unknown metric '" + m + "'");
    {
        ScenarioFile probe = spec.base;
        apply_axis(probe, spec.axis, spec.values.front()); // resolves the path once up front
    }
    const std::size_t l = spec.base.l();
    const Index n = spec.base.n, m = spec.base.m;
    auto wants = [&](const char* name) {
        return std::find(spec.metrics.begin(), spec.metrics.end(), name) != spec.metrics.end();
    };
    const bool simulate_needed = wants("steps") || wants("converged") || wants("xbar") || wants("wbar") || wants("limit");

    SweepTable table;
    table.header = {"value", "status"};
    for (const auto& name : spec.metrics) {
        if (name == "steps" || name == "converged") {
            table.header.push_back(name);
        } else if (name == "limit") {
            for (std::size_t k = 1; k <= l; ++k) {
                for (Index i = 1; i <= n; ++i) table.header.push_back("x" + std::to_string(k) + "_" + std::to_string(i));
                for (Index j = 1; j <= m; ++j) table.header.push_back("w" + std::to_string(k) + "_" + std::to_string(j));
            }
        } else {
            for (std::size_t k = 1; k <= l; ++k) table.header.push_back(name + std::to_string(k));
        }
    }
    table.rows.resize(spec.values.size());

    auto evaluate = [&](std::size_t idx) {
        std::vector<std::string>& row = table.rows[idx];
        row.assign(table.header.size(), "");
        row[0] = format_double(spec.values[idx]);
        ScenarioFile s = spec.base;
        apply_axis(s, spec.axis, spec.values[idx]);
        if (!s.validate().passed) {
            row[1] = "invalid";
            return;
        }
        Trajectory traj;
        try {
            if (simulate_needed) traj = simulate_multi(s.scenario(), s.schedules(), sim);
        } catch (const std::exception&) {
            row[1] = "error";
            return;
        }
        row[1] = "ok";
        std::size_t col = 2;
        for (const auto& name : spec.metrics) {
            if (name == "steps") {
                row[col++] = std::to_string(traj.steps);
            } else if (name == "converged") {
                row[col++] = traj.converged ? "true" : "false";
            } else if (name == "limit") {
                for (const State& z : traj.limit) {
                    for (Index i = 0; i < z.x.size(); ++i) row[col++] = format_double(z.x(i));
                    for (Index j = 0; j < z.w.size(); ++j) row[col++] = format_double(z.w(j));
                }
            } else {
                for (std::size_t k = 0; k < l; ++k) {
                    double v = 0.0;
                    if (name == "r0") v = reproduction_number(assemble_full(s.viruses[k].pieces[0].params, s.h));
                    else if (name == "s1") v = s1_shifted(assemble_full(s.viruses[k].pieces[0].params, s.h));
                    else if (name == "xbar") v = averages(traj.limit[k]).first;
                    else v = averages(traj.limit[k]).second;
                    row[col++] = format_double(v);
                }
            }
        }
    };

    unsigned count = workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : workers;
    count = static_cast<unsigned>(std::min<std::size_t>(count, spec.values.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < spec.values.size(); i = next++) {
            try {
                evaluate(i);
            } catch (const std::exception&) {
                auto& row = table.rows[i];
                std::fill(row.begin() + 2, row.end(), std::string());
                row[1] = "error";
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < count; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return table;
}

void write_csv(std::ostream& os, const SweepTable& table) {
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << '\n';
    };
    line(table.header);
    for (const auto& r : table.rows) line(r);
}

} // namespace siws
