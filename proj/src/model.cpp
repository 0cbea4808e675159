#include "siws/model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

namespace siws {

namespace {

std::string shape(const Matrix& M) {
    return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

std::string where(std::size_t virus, std::size_t l, const std::string& what, Index i) {
    std::string s;
    if (l > 1) s = "virus " + std::to_string(virus + 1) + ", ";
    return s + what + " " + std::to_string(i + 1);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// BFS over the nonzero pattern; `transpose` follows edges backwards.
std::size_t reachable_from_zero(const Matrix& A, bool transpose) {
    const Index N = A.rows();
    std::vector<char> seen(static_cast<std::size_t>(N), 0);
    std::queue<Index> todo;
    todo.push(0);
    seen[0] = 1;
    std::size_t count = 1;
    while (!todo.empty()) {
        const Index u = todo.front();
        todo.pop();
        for (Index v = 0; v < N; ++v) {
            // edge u -> v exists iff A(v, u) > 0
            const double a = transpose ? A(u, v) : A(v, u);
            if (a > 0.0 && !seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++count;
                todo.push(v);
            }
        }
    }
    return count;
}

} // namespace

void SpreadingParams::check_shapes() const {
    const Index nn = B.rows();
    const Index mm = C_w.rows();
    if (B.cols() != nn)
        throw DimensionError("B must be square, got " + shape(B));
    if (B_w.rows() != nn || B_w.cols() != mm)
        throw DimensionError("B_w must be " + std::to_string(nn) + "x" + std::to_string(mm) + ", got " + shape(B_w));
    if (C_w.cols() != nn)
        throw DimensionError("C_w must be " + std::to_string(mm) + "x" + std::to_string(nn) + ", got " + shape(C_w));
    if (D.size() != nn)
        throw DimensionError("D must have " + std::to_string(nn) + " entries, got " + std::to_string(D.size()));
    if (D_w.size() != mm)
        throw DimensionError("D_w must have " + std::to_string(mm) + " entries, got " + std::to_string(D_w.size()));
}

bool SpreadingParams::operator==(const SpreadingParams& o) const {
    auto same = [](const auto& a, const auto& b) {
        return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    };
    return same(B, o.B) && same(B_w, o.B_w) && same(C_w, o.C_w) && same(D, o.D) && same(D_w, o.D_w);
}

SpreadingParams FullSystem::disassemble() const {
    SpreadingParams p;
    p.B = B_f.topLeftCorner(n, n);
    p.B_w = B_f.topRightCorner(n, m);
    p.C_w = B_f.bottomLeftCorner(m, n);
    p.D = D_f.head(n);
    p.D_w = D_f.tail(m);
    return p;
}

State State::from_stacked(const Vector& z, Index n) {
    if (n > z.size()) throw DimensionError("stacked state shorter than n");
    return {z.head(n), z.tail(z.size() - n)};
}

Vector State::stacked() const {
    Vector z(x.size() + w.size());
    z << x, w;
    return z;
}

double State::max_abs_diff(const State& o) const {
    if (x.size() != o.x.size() || w.size() != o.w.size()) throw DimensionError("state shapes differ");
    double d = 0.0;
    if (x.size() > 0) d = (x - o.x).cwiseAbs().maxCoeff();
    if (w.size() > 0) d = std::max(d, (w - o.w).cwiseAbs().maxCoeff());
    return d;
}

double State::max_norm() const {
    double d = 0.0;
    if (x.size() > 0) d = x.cwiseAbs().maxCoeff();
    if (w.size() > 0) d = std::max(d, w.cwiseAbs().maxCoeff());
    return d;
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    os << (passed ? "passed" : "FAILED") << " (" << violations.size() << " violations, "
       << endemic_violations.size() << " endemic-assumption violations)\n";
    for (const auto& v : violations) os << "  [" << v.assumption << "] " << v.location << ": " << v.message << '\n';
    for (const auto& v : endemic_violations)
        os << "  [" << v.assumption << "] " << v.location << ": " << v.message << '\n';
    return os.str();
}

void MultiVirusScenario::check_shapes() const {
    if (viruses.empty()) throw DimensionError("scenario has no viruses");
    if (initial.size() != viruses.size())
        throw DimensionError("scenario needs one initial state per virus");
    const Index nn = n(), mm = m();
    for (std::size_t k = 0; k < viruses.size(); ++k) {
        viruses[k].check_shapes();
        if (viruses[k].n() != nn || viruses[k].m() != mm)
            throw DimensionError("virus " + std::to_string(k + 1) + " has different (n, m)");
        if (initial[k].x.size() != nn || initial[k].w.size() != mm)
            throw DimensionError("initial state of virus " + std::to_string(k + 1) + " has wrong shape");
    }
}

FullSystem assemble_full(const SpreadingParams& p, double h) {
    p.check_shapes();
    const Index n = p.n(), m = p.m();
    FullSystem f;
    f.n = n;
    f.m = m;
    f.h = h;
    f.B_f = Matrix::Zero(n + m, n + m);
    f.B_f.topLeftCorner(n, n) = p.B;
    f.B_f.topRightCorner(n, m) = p.B_w;
    f.B_f.bottomLeftCorner(m, n) = p.C_w;
    f.D_f.resize(n + m);
    f.D_f << p.D, p.D_w;
    return f;
}

double compute_w_max(std::span<const SpreadingParams* const> pieces, const Vector& w0) {
    if (pieces.empty()) throw std::invalid_argument("compute_w_max: empty schedule");
    double bound = w0.size() > 0 ? w0.maxCoeff() : 0.0;
    for (const SpreadingParams* p : pieces) {
        p->check_shapes();
        if (w0.size() != p->m()) throw DimensionError("compute_w_max: w0 has wrong size");
        for (Index j = 0; j < p->m(); ++j) {
            const double dw = p->D_w(j);
            if (!(dw > 0.0))
                throw DomainError("compute_w_max: decay rate of resource " + std::to_string(j + 1) +
                                  " must be positive");
            const double row = p->C_w.row(j).sum();
            if (!(p->C_w.row(j).maxCoeff() > 0.0))
                throw DomainError("compute_w_max: resource " + std::to_string(j + 1) +
                                  " is not contaminated by any population node");
            bound = std::max(bound, row / dw);
        }
    }
    return bound;
}

double compute_w_max(const SpreadingParams& params, const Vector& w0) {
    const SpreadingParams* one[] = {&params};
    return compute_w_max(std::span<const SpreadingParams* const>(one), w0);
}

bool check_irreducible(const Matrix& A) {
    if (A.rows() != A.cols()) throw DimensionError("check_irreducible: matrix must be square, got " + shape(A));
    const auto N = static_cast<std::size_t>(A.rows());
    if (N == 0) return false;
    return reachable_from_zero(A, false) == N && reachable_from_zero(A, true) == N;
}

ValidationReport validate_pieces(const std::vector<std::vector<const SpreadingParams*>>& pieces,
                                 std::span<const State> initial, double h) {
    ValidationReport rep;
    const std::size_t l = pieces.size();
    auto fail = [&](std::string id, std::string loc, std::string msg) {
        rep.violations.push_back({std::move(id), std::move(loc), std::move(msg)});
    };

    if (l == 0 || initial.size() != l) {
        fail("shape", "scenario", "need one non-empty parameter list and one initial state per virus");
        rep.passed = false;
        return rep;
    }
    if (!(h > 0.0) || !std::isfinite(h)) fail("A1.4", "h", "sampling period must be positive and finite, got " + fmt(h));

    // Shapes first; nothing else is meaningful if they are off.
    const Index n = pieces[0].empty() ? 0 : pieces[0][0]->n();
    const Index m = pieces[0].empty() ? 0 : pieces[0][0]->m();
    for (std::size_t k = 0; k < l; ++k) {
        if (pieces[k].empty()) {
            fail("shape", where(k, l, "virus", 0), "no parameters");
            continue;
        }
        for (const SpreadingParams* p : pieces[k]) {
            try {
                p->check_shapes();
                if (p->n() != n || p->m() != m) throw DimensionError("inconsistent (n, m) across viruses or pieces");
            } catch (const DimensionError& e) {
                fail("shape", where(k, l, "virus", static_cast<Index>(k)), e.what());
            }
        }
        if (initial[k].x.size() != n || initial[k].w.size() != m)
            fail("shape", where(k, l, "virus", static_cast<Index>(k)), "initial state has wrong shape");
    }
    if (!rep.violations.empty()) {
        rep.passed = false;
        return rep;
    }

    // A1.1: initial infection levels (summed over viruses) lie in [0, 1].
    for (Index i = 0; i < n; ++i) {
        double total = 0.0;
        for (std::size_t k = 0; k < l; ++k) {
            const double xi = initial[k].x(i);
            if (!std::isfinite(xi) || xi < 0.0 || xi > 1.0)
                fail("A1.1", where(k, l, "node", i), "x(0) = " + fmt(xi) + " outside [0, 1]");
            total += xi;
        }
        if (l > 1 && total > 1.0)
            fail("A1.1", "node " + std::to_string(i + 1), "sum over viruses of x(0) = " + fmt(total) + " exceeds 1");
    }

    // A1.2: signs and resource connectivity.
    for (std::size_t k = 0; k < l; ++k) {
        for (const SpreadingParams* p : pieces[k]) {
            for (Index i = 0; i < n; ++i) {
                if (!(p->D(i) > 0.0) || !std::isfinite(p->D(i)))
                    fail("A1.2", where(k, l, "node", i), "healing rate must be positive, got " + fmt(p->D(i)));
                for (Index j = 0; j < n; ++j)
                    if (!(p->B(i, j) >= 0.0) || !std::isfinite(p->B(i, j)))
                        fail("A1.2", where(k, l, "node", i),
                             "infection rate from node " + std::to_string(j + 1) + " is " + fmt(p->B(i, j)));
                for (Index j = 0; j < m; ++j)
                    if (!(p->B_w(i, j) >= 0.0) || !std::isfinite(p->B_w(i, j)))
                        fail("A1.2", where(k, l, "node", i),
                             "infection rate from resource " + std::to_string(j + 1) + " is " + fmt(p->B_w(i, j)));
            }
            for (Index j = 0; j < m; ++j) {
                if (!(p->D_w(j) > 0.0) || !std::isfinite(p->D_w(j)))
                    fail("A1.2", where(k, l, "resource", j), "decay rate must be positive, got " + fmt(p->D_w(j)));
                bool any = false;
                for (Index i = 0; i < n; ++i) {
                    if (!(p->C_w(j, i) >= 0.0) || !std::isfinite(p->C_w(j, i)))
                        fail("A1.2", where(k, l, "resource", j),
                             "contamination rate from node " + std::to_string(i + 1) + " is " + fmt(p->C_w(j, i)));
                    any = any || p->C_w(j, i) > 0.0;
                }
                if (!any) fail("A1.2", where(k, l, "resource", j), "not contaminated by any population node");
            }
        }
    }

    // A1.3: initial concentrations are nonnegative; w_max is computed so the
    // upper bound holds by construction.
    for (std::size_t k = 0; k < l; ++k)
        for (Index j = 0; j < m; ++j) {
            const double wj = initial[k].w(j);
            if (!std::isfinite(wj) || wj < 0.0)
                fail("A1.3", where(k, l, "resource", j), "w(0) = " + fmt(wj) + " must be nonnegative");
        }

    const bool params_ok = rep.violations.empty();
    rep.w_max.assign(l, 0.0);
    if (params_ok) {
        for (std::size_t k = 0; k < l; ++k)
            rep.w_max[k] = compute_w_max(std::span<const SpreadingParams* const>(pieces[k]), initial[k].w);
    }

    if (params_ok && h > 0.0) {
        // A1.4: step-size bounds. The infection bound sums over viruses.
        for (std::size_t k = 0; k < l; ++k)
            for (const SpreadingParams* p : pieces[k]) {
                for (Index i = 0; i < n; ++i) {
                    const double hd = h * p->D(i);
                    if (hd > 1.0) fail("A1.4", where(k, l, "node", i), "h*delta = " + fmt(hd) + " exceeds 1");
                    const double load = h * (p->B.row(i).sum() + p->B_w.row(i).sum() * rep.w_max[k]);
                    if (h * (p->D(i)) + load > 1.0)
                        rep.endemic_violations.push_back(
                            {"A6", where(k, l, "node", i),
                             "h*(delta + sum beta + sum beta_w * w_max) = " + fmt(hd + load) + " exceeds 1"});
                }
                for (Index j = 0; j < m; ++j) {
                    const double hd = h * p->D_w(j);
                    if (hd > 1.0) fail("A1.4", where(k, l, "resource", j), "h*delta_w = " + fmt(hd) + " exceeds 1");
                }
            }
        // Joint infection pressure: the worst case over every combination of
        // pieces is the sum of the per-virus maxima.
        for (Index i = 0; i < n; ++i) {
            double total = 0.0;
            for (std::size_t k = 0; k < l; ++k) {
                double worst = 0.0;
                for (const SpreadingParams* p : pieces[k])
                    worst = std::max(worst, h * (p->B.row(i).sum() + p->B_w.row(i).sum() * rep.w_max[k]));
                total += worst;
            }
            if (total > 1.0)
                fail("A1.4", "node " + std::to_string(i + 1),
                     "h*(sum beta + sum beta_w * w_max) = " + fmt(total) + " exceeds 1");
        }
    }

    // A2: every equivalent graph is strongly connected.
    if (params_ok) {
        for (std::size_t k = 0; k < l; ++k)
            for (std::size_t q = 0; q < pieces[k].size(); ++q) {
                const FullSystem f = assemble_full(*pieces[k][q], h);
                if (!check_irreducible(f.B_f)) {
                    std::string loc = l > 1 ? "virus " + std::to_string(k + 1) : std::string("network");
                    if (pieces[k].size() > 1) loc += ", piece " + std::to_string(q + 1);
                    fail("A2", loc, "equivalent graph is not strongly connected");
                }
            }
    }

    rep.passed = rep.violations.empty();
    return rep;
}

ValidationReport validate(const MultiVirusScenario& s) {
    std::vector<std::vector<const SpreadingParams*>> pieces;
    for (const auto& p : s.viruses) pieces.push_back({&p});
    return validate_pieces(pieces, s.initial, s.h);
}

ValidationReport validate(const SpreadingParams& params, const State& z0, double h) {
    std::vector<std::vector<const SpreadingParams*>> pieces{{&params}};
    return validate_pieces(pieces, std::span<const State>(&z0, 1), h);
}

} // namespace siws
