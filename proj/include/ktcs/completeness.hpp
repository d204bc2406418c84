// completeness.hpp
// Resolution of unity for the KTCS family. The weight function solving the
// Stieltjes moment problem
//   integral_0^inf W~(x) x^n dx = (n+p)! (n+q)! n!
// is
//   W~(x;p,q,0) = integral_0^inf t^{-1+(p+q)/2} e^{-x/t} K_{q-p}(2 sqrt t) dt
// with K_nu the modified Bessel function of the second kind, and the full
// weight is W_{Kj} = W~/(pi N_{Kj}^2). This module evaluates W~ by
// quadrature, certifies the moments, reconstructs states from the kernel
// integral, checks a finite principal submatrix of the unity operator, and
// runs the Carleman/logarithmic uniqueness test (which reports the solution
// as non-unique, with the limit exponent -3K/2).

#pragma once

#include <string>
#include <vector>

#include "ktcs/fock_core.hpp"

namespace ktcs {

// K_n(x) for integer n >= 0, x > 0, to 1e-10 relative. Ascending series for
// x <= 2; a continued-fraction evaluation (Thompson-Barnett) above; upward
// recurrence K_{n+1} = K_{n-1} + (2n/x) K_n for higher orders.
// K_{-n} = K_n. Throws DomainError for x <= 0.
double bessel_k(int order, double x);

// W~(x; p, q, 0), positive for x > 0. Computed after the substitution
// t = u^2 (which makes the Bessel argument smooth) by composite Simpson
// with interval doubling until successive estimates agree to 1e-9 relative;
// the improper tails are truncated where the integrand falls below 1e-16 of
// its running peak. Throws QuadratureNotConverged on failure.
double weight_tilde(double x, int p, int q);

// W_{Kj}(r^2) = W~(r^2)/(pi N_{Kj}^2(r^2))
double weight_full(const KtcsParams& params, double r2);

struct MomentProblem {
    int p = 0;
    int q = 0;
    int n_max_check = 8;      // <= 10 (double-precision quadrature budget)
    double tolerance = 1e-6;  // relative
};

struct MomentEntry {
    int n;
    double computed;   // integral of W~(x) x^n dx by nested quadrature
    double expected;   // (n+p)! (n+q)! n!
    double rel_error;
};

struct MomentReport {
    MomentProblem problem;
    std::vector<MomentEntry> entries;
    double worst_rel_error = 0.0;
    long long quadrature_nodes = 0;  // outer integrand evaluations, total
    std::string to_json() const;
};

// Checks integral W~ x^n dx = rho_pq0(n) for n = 0..n_max_check.
// Throws MomentMismatch if any entry exceeds the tolerance.
MomentReport verify_moments(const MomentProblem& problem);

struct KernelCheckResult {
    double max_residual = 0.0;        // max per-amplitude reconstruction error
    double max_off_residue = 0.0;     // amplitude leaked outside the residue class
    int radial_nodes = 0;
    int angular_nodes = 0;
};

// Reconstructs |xi>_{Kj} from the weighted integral of |xi'>_{Kj} over the
// xi' plane (the self-representation under the resolution of unity) on a
// radial x angular grid, and reports the worst amplitude residual.
KernelCheckResult reproducing_kernel_check(const KtcsParams& params, int radial_nodes,
                                           int angular_nodes, double r_max);

// Principal submatrix (chain indices 0..n_sub) of
// sum_j integral d^2 xi |xi>_{Kj} W_{Kj} <xi|_{Kj}; equals the identity on
// the truncated chain. Returns the matrix of absolute deviations from the
// identity entry-wise... [row][col], real parts (imaginary parts are
// quadrature noise and are folded into the deviation).
std::vector<std::vector<double>> unity_deviation(int K, int p, int q, int n_sub,
                                                 int radial_nodes, int angular_nodes);

struct CarlemanResult {
    double ratio_at_probe = 0.0;   // ln(S_n)/ln(n) at n = n_probe
    double estimate = 0.0;         // extrapolated limit (log-log slope)
    bool non_unique = false;       // estimate < -1
};

// S_n = rho_pq0(Kn+j)^{-1/2n}; the logarithmic test on sum S_n. The limit
// of ln(S_n)/ln(n) is -3K/2, so the moment-problem solution is never
// unique; this routine measures rather than assumes that.
CarlemanResult carleman_test(int K, int j, int p, int q, long long n_probe);

}  // namespace ktcs
