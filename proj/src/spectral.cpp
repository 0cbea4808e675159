#include "siws/spectral.hpp"

#include <cmath>
#include <string>

namespace siws {

namespace {

struct Dominant {
    double rho;
    Vector vec;
    long iterations;
    double residual;
};

// Fallback for nearly degenerate spectra: inverse iteration on sigma*I - M
// with sigma just above the Collatz-Wielandt bound max_i (Mx)_i / x_i >= rho,
// which makes rho by far the dominant eigenvalue of the resolvent.
Dominant inverse_iterate(const Matrix& M, Vector x, double tol, long spent) {
    Vector y = M * x;
    double upper = M.rowwise().sum().maxCoeff();
    if ((x.array() > 0.0).all()) upper = std::min(upper, (y.array() / x.array()).maxCoeff());
    const double sigma = upper + 1e-8 * std::max(1.0, upper);
    Matrix S = -M;
    S.diagonal().array() += sigma;
    const Eigen::PartialPivLU<Matrix> lu(S);
    for (long it = 1; it <= 100; ++it) {
        x = lu.solve(x);
        x /= x.sum();
        if (!x.allFinite()) break;
        y.noalias() = M * x;
        const double rho = y.sum();
        const double residual = (y - rho * x).cwiseAbs().maxCoeff();
        if (residual <= tol * std::max(1.0, rho)) return {std::max(rho, 0.0), x, spent + it, residual};
    }
    throw ConvergenceError("power iteration did not converge within " + std::to_string(spent) +
                           " iterations, nor with the inverse-iteration fallback");
}

Dominant power_iterate(const Matrix& M, double tol, long cap) {
    const Index N = M.rows();
    // Shifting by about rho keeps eigenvalues of equal modulus (2-cycles,
    // rotations) well separated from rho + shift.
    const double eps = std::max(1e-9 * M.maxCoeff(), M.rowwise().sum().mean());
    Vector x = Vector::Constant(N, 1.0 / static_cast<double>(N));
    Vector y(N);
    for (long it = 1; it <= cap; ++it) {
        y.noalias() = M * x;
        const double rho = y.sum(); // x sums to one
        if (rho <= 0.0) return {0.0, x, it, y.cwiseAbs().maxCoeff()};
        const double residual = (y - rho * x).cwiseAbs().maxCoeff();
        if (residual <= tol * std::max(1.0, rho)) return {rho, x, it, residual};
        y += eps * x;
        x = y / y.sum();
    }
    return inverse_iterate(M, x, tol, cap);
}

} // namespace

PerronData spectral_radius(const Matrix& M, const PowerOptions& opts) {
    if (M.rows() != M.cols()) throw DimensionError("spectral_radius: matrix must be square");
    if (M.size() == 0) throw DimensionError("spectral_radius: empty matrix");
    if (!M.allFinite()) throw DomainError("spectral_radius: matrix has non-finite entries");
    if (M.minCoeff() < 0.0) throw DomainError("spectral_radius: matrix has negative entries");

    const double N = static_cast<double>(M.rows());
    const long cap = opts.max_iterations > 0 ? opts.max_iterations
                                             : static_cast<long>(100.0 * N * std::log(N)) + 1000;

    const Dominant r = power_iterate(M, opts.tol, cap);
    PerronData out;
    out.rho = r.rho;
    out.right = r.vec;
    out.iterations = r.iterations;
    out.residual = r.residual;
    if (opts.left) {
        const Dominant l = power_iterate(M.transpose(), opts.tol, cap);
        out.left = l.vec;
        out.iterations += l.iterations;
    }
    return out;
}

double metzler_abscissa(const Matrix& M, double tol) {
    if (M.rows() != M.cols()) throw DimensionError("metzler_abscissa: matrix must be square");
    const Index N = M.rows();
    for (Index i = 0; i < N; ++i)
        for (Index j = 0; j < N; ++j)
            if (i != j && M(i, j) < 0.0) throw DomainError("metzler_abscissa: negative off-diagonal entry");
    const double c = std::max(0.0, -M.diagonal().minCoeff());
    Matrix shifted = M;
    shifted.diagonal().array() += c;
    PowerOptions opts;
    opts.tol = tol;
    opts.left = false;
    return spectral_radius(shifted, opts).rho - c;
}

double reproduction_number(const FullSystem& full) {
    if (full.D_f.size() != full.B_f.rows()) throw DimensionError("reproduction_number: D_f has wrong size");
    for (Index i = 0; i < full.D_f.size(); ++i)
        if (!(full.D_f(i) > 0.0))
            throw DomainError("reproduction_number: entry " + std::to_string(i + 1) + " of D_f is not positive");
    const Matrix M = full.D_f.cwiseInverse().asDiagonal() * full.B_f;
    PowerOptions opts;
    opts.left = false;
    return spectral_radius(M, opts).rho;
}

const char* to_string(Sign s) {
    switch (s) {
    case Sign::negative: return "negative";
    case Sign::zero: return "zero";
    case Sign::positive: return "positive";
    }
    return "?";
}

Sign metzler_sign(const Matrix& Lambda, const Matrix& N, double zero_band) {
    if (Lambda.rows() != Lambda.cols() || N.rows() != N.cols() || Lambda.rows() != N.rows())
        throw DimensionError("metzler_sign: Lambda and N must be square of equal size");
    const Index n = Lambda.rows();
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (i != j && Lambda(i, j) != 0.0) throw DomainError("metzler_sign: Lambda is not diagonal");
    if (Lambda.diagonal().maxCoeff() >= 0.0) throw DomainError("metzler_sign: Lambda must be negative diagonal");

    const Matrix scaled = (-Lambda.diagonal()).cwiseInverse().asDiagonal() * N;
    PowerOptions opts;
    opts.left = false;
    const double rho = spectral_radius(scaled, opts).rho;
    if (std::abs(rho - 1.0) <= zero_band) return Sign::zero;
    return rho < 1.0 ? Sign::negative : Sign::positive;
}

Matrix shifted_matrix(const FullSystem& full) {
    Matrix M = full.h * full.B_f;
    M.diagonal().array() += 1.0 - full.h * full.D_f.array();
    return M;
}

double s1_shifted(const FullSystem& full) {
    if (full.D_f.size() != full.B_f.rows()) throw DimensionError("s1_shifted: D_f has wrong size");
    if (shifted_matrix(full).minCoeff() < 0.0)
        throw DomainError("s1_shifted: I - h D_f + h B_f has negative entries");
    // s1(I + h A) = 1 + h s1(A) with A = B_f - D_f; iterating on A avoids the
    // slow convergence of the near-identity matrix when h is small.
    Matrix A = full.B_f;
    A.diagonal() -= full.D_f;
    return 1.0 + full.h * metzler_abscissa(A);
}

} // namespace siws
