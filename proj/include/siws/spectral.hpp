#pragma once

#include "siws/model.hpp"

namespace siws {

/// Dominant eigenpair of a nonnegative matrix.
struct PerronData {
    double rho = 0.0;
    Vector right; // unit 1-norm
    Vector left;  // unit 1-norm
    long iterations = 0;
    double residual = 0.0; // max-norm of M*right - rho*right
};

struct PowerOptions {
    double tol = 1e-12;
    long max_iterations = 0; // 0: 100*N*log(N) + 1000
    bool left = true;        // also compute the left vector
};

/// Spectral radius and Perron vectors by power iteration.
///
/// Iterates on M + eps*I with eps the mean row sum (at least 1e-9 * max
/// entry), which lies between the smallest and largest row sums and hence
/// near rho, so imprimitive matrices (e.g. 2-cycles) converge quickly. The
/// reported rho is the unshifted quotient sum(M x) / sum(x). Stops once the
/// residual falls below tol * max(1, rho). Nearly degenerate spectra that exhaust the cap get up
/// to 100 inverse-iteration steps on (sigma I - M), sigma just above rho.
/// Throws DomainError on negative entries and ConvergenceError when both
/// stages fail.
PerronData spectral_radius(const Matrix& M, const PowerOptions& opts = {});

/// Largest real part of the eigenvalues of a Metzler matrix, computed as
/// rho(M + c I) - c with c making the diagonal nonnegative.
double metzler_abscissa(const Matrix& M, double tol = 1e-12);

/// rho(D_f^{-1} B_f).
double reproduction_number(const FullSystem& full);

enum class Sign { negative, zero, positive };

const char* to_string(Sign s);

/// Sign of s1(Lambda + N) for a negative diagonal Lambda and an irreducible
/// nonnegative N, decided through rho(-Lambda^{-1} N) versus 1. Radii within
/// `zero_band` of 1 count as zero.
Sign metzler_sign(const Matrix& Lambda, const Matrix& N, double zero_band = 1e-12);

/// s1(I - h D_f + h B_f), which equals its spectral radius because the
/// matrix is nonnegative. Throws DomainError if it is not.
double s1_shifted(const FullSystem& full);

/// The (n+m)-square nonnegative matrix I - h D_f + h B_f.
Matrix shifted_matrix(const FullSystem& full);

} // namespace siws
