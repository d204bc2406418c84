// fock_core.hpp
// Truncated Fock-space representation of K-dimensional trio coherent states
// (KTCS). A KTCS |xi,p,q>_{Kj} lives on the correlated chain
// |n+q>_a |n+p>_b |n>_c with support restricted to n == j (mod K):
//
//   |xi,p,q>_{Kj} = N_{Kj}(r^2) * sum_n xi^{Kn+j}/sqrt(rho(Kn+j)) |chain Kn+j>
//   rho_pq0(n)    = (n+p)! (n+q)! n!
//   N_{Kj}(x)     = ( sum_m x^{Km+j}/rho(Km+j) )^{-1/2}
//
// All factorial weights are handled in the log domain; the normalization
// series and its derivatives are summed after subtracting the largest
// log-term so the code stays finite far beyond the point where rho(n)
// overflows a double (n ~ 57).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "ktcs/errors.hpp"

namespace ktcs {

using complexd = std::complex<double>;

// Labels one state |xi,p,q>_{Kj}. xi is kept in polar form; everything that
// depends only on |xi|^2 uses z = r^2 and never touches the phase.
struct KtcsParams {
    double xi_mod = 0.0;  // r = |xi|
    double xi_arg = 0.0;  // phase of xi, radians
    int p = 0;            // charge <n_b> - <n_c>
    int q = 0;            // charge <n_a> - <n_c>
    int K = 1;            // order of the lowering eigenproblem
    int j = 0;            // residue class of the chain support, 0 <= j < K

    complexd xi() const;
    double z() const { return xi_mod * xi_mod; }

    // throws ValidationError unless K >= 1, 0 <= j < K, p,q >= 0, r >= 0
    void validate() const;
};

// ln rho_pq0(n) = ln[(n+p)! (n+q)! n!], via lgamma.
double log_rho(long long n, int p, int q);

// The normalization series S(z) = sum_m z^{Km+j}/rho(Km+j) = N_{Kj}^{-2}
// together with its first two z-derivatives, all summed term-wise
// analytically (never by finite differences).
struct SeriesCache {
    double z = 0.0;
    double S = 0.0;
    double dS = 0.0;
    double d2S = 0.0;
    double log_S = 0.0;  // ln S, valid when S > 0
    int terms_used = 0;
};

// Term-wise summation in the log domain, truncated once a term's relative
// contribution drops below 1e-18. S(0) is legal for any j (it is 0 for j>0).
SeriesCache normalization_series(const KtcsParams& params, double z);

// N_{Kj}(z) = S(z)^{-1/2}. Throws NonNormalizable when S = 0 (z = 0, j > 0).
double normalization_constant(const KtcsParams& params, double z);

// S(w) = sum_m w^{Km+j}/rho(Km+j) for complex w, with the magnitude carried
// in the log domain and the phase tracked separately. This is the analytic
// continuation used by overlaps (w = conj(xi')*xi) and by the Q-function
// slice (w = xi*(x-iy)^3).
complexd series_s(const KtcsParams& params, complexd w);

// sum_{n in chain} weight(n) * z^n/rho(n), normalized by S(z); weights must
// be nonnegative. This evaluates z^{l-o} N^2 d^l/dz^l (z^o S) style
// closed forms exactly, since term-wise differentiation of the series turns
// every such expression into a falling-factorial weighted sum.
template <typename WeightFn>
double series_weighted_mean(const KtcsParams& params, double z, WeightFn&& weight);

// One state vector over the chain index n (amplitude[n] multiplies
// |n+q, n+p, n>). Immutable after construction in practice; operations
// below return fresh values.
struct TrioState {
    int K = 1;
    int j = 0;
    int p = 0;
    int q = 0;
    complexd xi{0.0, 0.0};
    int n_max = 0;
    std::vector<complexd> amplitudes;  // size n_max+1, chain index n

    double norm() const;
    std::string to_json() const;  // {K,j,p,q,xi:[re,im],n_max,amplitudes:[[re,im],...]}
};

// Smallest truncation with dropped tail probability below 1e-14 AND last
// kept chain probability below min(1e-14, 1e-21/z^K). The second bound
// keeps the (abc)^K eigenvalue residual under ~1e-10 even at z = 100,
// K = 5, where the top amplitudes get multiplied by xi^K.
int auto_n_max(const KtcsParams& params);

// Explicit Fock expansion, unit norm over the truncation.
// n_max < 0 selects auto_n_max; an explicit n_max that leaves more than
// 1e-8 of tail probability throws TruncationTooSmall.
TrioState build_ktcs(const KtcsParams& params, int n_max = -1);

// <a|b>: plain amplitude dot product. States with different charges are
// orthogonal by Fock support.
complexd overlap(const TrioState& a, const TrioState& b);

// Closed form of the same overlap:
//   <a|b> = delta_{jj'} delta_{pp'} delta_{qq'} N(z_a) N(z_b) S(conj(xi_a) xi_b)
// evaluated through normalization_series / series_s.
complexd overlap_closed_form(const KtcsParams& bra, const KtcsParams& ket);

// Apply the three-mode lowering operator (abc) `times` times:
// amplitude'[n] = amplitude[n+times] * sqrt(rho(n+times)/rho(n)).
TrioState apply_abc(const TrioState& state, int times);

// || (abc)^K |state> - xi^K |state> ||
double eigen_residual(const TrioState& state);

// ---- implementation of the template ----

namespace detail {
// log-domain accumulation helpers shared by the series code
struct LogSum {
    double max_log = -1e308;
    double scaled_sum = 0.0;  // sum of exp(log_t - max_log)
    void add(double log_t);
    double value() const;  // exp(max_log) * scaled_sum (may underflow to 0)
    double log_value() const;
};
}  // namespace detail

template <typename WeightFn>
double series_weighted_mean(const KtcsParams& params, double z, WeightFn&& weight) {
    params.validate();
    if (z < 0.0) throw DomainError("series_weighted_mean: z must be >= 0");
    const SeriesCache cache = normalization_series(params, z);
    if (cache.S <= 0.0)
        throw NonNormalizable("series_weighted_mean: S(z) = 0, state not normalizable");
    if (z == 0.0) {
        // only the n = j term survives
        return weight(static_cast<long long>(params.j));
    }
    const double log_z = std::log(z);
    detail::LogSum num;
    double peak = -1e308;
    for (int m = 0;; ++m) {
        const long long n = static_cast<long long>(params.K) * m + params.j;
        const double w = weight(n);
        const double log_t = static_cast<double>(n) * log_z - log_rho(n, params.p, params.q);
        if (w > 0.0) num.add(log_t + std::log(w));
        peak = std::max(peak, log_t);
        // stop once the bare chain terms are negligible; weights here are
        // polynomial in n and cannot rescue a factorially dying tail
        if (log_t < peak - 60.0 && m > 2) break;
        if (m > 2000000) throw QuadratureNotConverged("series_weighted_mean: series did not decay");
    }
    const double log_mean = num.log_value() - cache.log_S;
    return std::exp(log_mean);
}

}  // namespace ktcs
