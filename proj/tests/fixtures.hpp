// Scenario builders shared by the unit and acceptance suites.
#pragma once

#include "siws/scenario.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace siws::fixtures {

inline SpreadingParams single_params(const ScenarioFile& f, std::size_t k = 0) { return f.viruses.at(k).pieces.at(0).params; }

/// Reference network size: n = 15, m = 2, h = 0.01.
inline ScenarioFile standard_network(std::uint64_t seed, Target target, std::size_t l = 1) {
    return generate_random(15, 2, l, 0.01, seed, target);
}

/// Largest real part of the spectrum by a dense solver (oracle).
inline double dense_abscissa(const Matrix& M) {
    const Eigen::EigenSolver<Matrix> es(M, false);
    double r = -1e300;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) r = std::max(r, es.eigenvalues()(i).real());
    return r;
}

inline double dense_radius(const Matrix& M) {
    const Eigen::EigenSolver<Matrix> es(M, false);
    double r = 0.0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) r = std::max(r, std::abs(es.eigenvalues()(i)));
    return r;
}

/// Random nonnegative matrix with the given density (diagonal included).
inline Matrix random_sparse(PortableRng& rng, Index rows, Index cols, double density) {
    Matrix M = Matrix::Zero(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            if (rng.bernoulli(density)) M(i, j) = rng.uniform01();
    return M;
}

/// Random parameters without regime targeting; B and B_w scaled by kappa.
inline SpreadingParams random_params(PortableRng& rng, Index n, Index m, double density, double kappa) {
    SpreadingParams p;
    p.B = kappa * random_sparse(rng, n, n, density);
    p.B_w = kappa * random_sparse(rng, n, m, density);
    p.C_w = random_sparse(rng, m, n, density);
    for (Index j = 0; j < m; ++j)
        if (p.C_w.row(j).maxCoeff() == 0.0) p.C_w(j, static_cast<Index>(rng.index(static_cast<std::size_t>(n)))) = rng.uniform01();
    p.D = Vector(n);
    p.D_w = Vector(m);
    for (Index i = 0; i < n; ++i) p.D(i) = rng.uniform(0.05, 1.0);
    for (Index j = 0; j < m; ++j) p.D_w(j) = rng.uniform(0.05, 1.0);
    return p;
}

/// Two mirrored communities sharing one resource: virus 1 thrives in nodes
/// 1..k, virus 2 is the same virus with the communities swapped.
inline MultiVirusScenario mirrored_pair(Index k, double h) {
    const Index n = 2 * k;
    SpreadingParams a;
    a.B = Matrix::Constant(n, n, 0.01);
    a.B.topLeftCorner(k, k).setConstant(0.4);
    a.B.bottomRightCorner(k, k).setConstant(0.02);
    a.B_w = Matrix::Constant(n, 1, 0.02);
    a.B_w.topRows(k).setConstant(0.2);
    a.C_w = Matrix::Constant(1, n, 0.1);
    a.D = Vector::Constant(n, 0.5);
    a.D_w = Vector::Constant(1, 0.5);

    // Permutation swapping the communities.
    Eigen::PermutationMatrix<Eigen::Dynamic> P(n);
    for (Index i = 0; i < n; ++i) P.indices()(i) = static_cast<int>((i + k) % n);
    SpreadingParams b = a;
    b.B = P * a.B * P.transpose();
    b.B_w = P * a.B_w;
    b.C_w = a.C_w * P.transpose();
    b.D = P * a.D;

    MultiVirusScenario s;
    s.h = h;
    s.viruses = {a, b};
    State z0{Vector::Constant(n, 0.2), Vector::Constant(1, 0.1)};
    s.initial = {z0, z0};
    return s;
}

/// Two pieces that are each subcritical but whose alternation is not:
/// node 2 strongly infects node 1 in one piece, node 1 infects node 2 in
/// the other.
inline std::pair<SpreadingParams, SpreadingParams> switching_counterexample() {
    SpreadingParams a;
    a.B = Matrix{{0.0, 10.0}, {0.01, 0.0}};
    a.B_w = Matrix::Constant(2, 1, 0.01);
    a.C_w = Matrix::Constant(1, 2, 0.01);
    a.D = Vector::Constant(2, 1.0);
    a.D_w = Vector::Constant(1, 1.0);
    SpreadingParams b = a;
    b.B = a.B.transpose();
    return {a, b};
}

} // namespace siws::fixtures
