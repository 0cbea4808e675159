#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace siws {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when matrix or vector shapes do not fit together.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a state or parameter lies outside the admissible domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when an iterative method exhausts its budget.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Spreading rates of one virus on a layered network of n population nodes
/// and m resource nodes.
///
/// Rows index the receiving node: B(i, j) is the rate at which group j
/// infects group i, B_w(i, j) the rate at which resource j infects group i,
/// C_w(j, k) the rate at which group k contaminates resource j.
struct SpreadingParams {
    Matrix B;   // n x n
    Matrix B_w; // n x m
    Matrix C_w; // m x n
    Vector D;   // n, healing rates
    Vector D_w; // m, pathogen decay rates

    Index n() const { return B.rows(); }
    Index m() const { return C_w.rows(); }

    /// Throws DimensionError unless all blocks agree on (n, m).
    void check_shapes() const;

    bool operator==(const SpreadingParams& other) const;
};

/// The equivalent (n+m)-node system: B_f = [B, B_w; C_w, 0], D_f = (D, D_w).
struct FullSystem {
    Matrix B_f;
    Vector D_f;
    double h = 0.0;
    Index n = 0;
    Index m = 0;

    Index size() const { return n + m; }
    SpreadingParams disassemble() const;
};

/// Stacked state z = (x, w).
struct State {
    Vector x;
    Vector w;

    State() = default;
    State(Vector x_, Vector w_) : x(std::move(x_)), w(std::move(w_)) {}

    static State zero(Index n, Index m) { return {Vector::Zero(n), Vector::Zero(m)}; }
    static State from_stacked(const Vector& z, Index n);

    Vector stacked() const;
    double max_abs_diff(const State& other) const;
    double max_norm() const;

    bool operator==(const State& other) const { return x == other.x && w == other.w; }
};

struct Violation {
    std::string assumption; // e.g. "A1.1", "A2", "A6"
    std::string location;   // 1-based, e.g. "node 3" or "virus 2, resource 1"
    std::string message;
};

/// Outcome of checking the well-posedness and stability assumptions.
///
/// `violations` covers everything the model needs to be well defined
/// (A1.x, A2). The stricter step bound A6 only matters for endemic
/// results, so its breaches are collected separately.
struct ValidationReport {
    bool passed = true;
    std::vector<double> w_max; // one per virus
    std::vector<Violation> violations;
    std::vector<Violation> endemic_violations;

    bool endemic_ready() const { return passed && endemic_violations.empty(); }
    std::string summary() const;
};

/// l competing viruses on a shared node set, each with its own rates and
/// initial state.
struct MultiVirusScenario {
    double h = 0.0;
    std::vector<SpreadingParams> viruses;
    std::vector<State> initial;

    std::size_t l() const { return viruses.size(); }
    Index n() const { return viruses.empty() ? 0 : viruses.front().n(); }
    Index m() const { return viruses.empty() ? 0 : viruses.front().m(); }

    /// Throws DimensionError if viruses or initial states disagree on shape.
    void check_shapes() const;
};

FullSystem assemble_full(const SpreadingParams& params, double h);

/// Upper bound on pathogen concentration that keeps the discrete map
/// domain-invariant: the largest initial concentration or the largest
/// ratio sum_k c_jk / delta^w_j over all given parameter sets.
double compute_w_max(std::span<const SpreadingParams* const> pieces, const Vector& w0);
double compute_w_max(const SpreadingParams& params, const Vector& w0);

/// True iff the digraph with an edge j -> i for every A(i, j) > 0 is
/// strongly connected.
bool check_irreducible(const Matrix& A);

/// Checks every assumption for a set of viruses whose parameters may take
/// several values over time (`pieces[k]` lists the values for virus k).
/// Never throws on assumption breaches; all of them end up in the report.
ValidationReport validate_pieces(const std::vector<std::vector<const SpreadingParams*>>& pieces,
                                 std::span<const State> initial, double h);

ValidationReport validate(const MultiVirusScenario& scenario);
ValidationReport validate(const SpreadingParams& params, const State& z0, double h);

} // namespace siws
