#include "ktcs/fock_core.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ktcs {

complexd KtcsParams::xi() const {
    return std::polar(xi_mod, xi_arg);
}

void KtcsParams::validate() const {
    if (K < 1) throw ValidationError("KtcsParams: K must be >= 1");
    if (j < 0 || j >= K) throw ValidationError("KtcsParams: j must satisfy 0 <= j < K");
    if (p < 0 || q < 0)
        throw ValidationError("KtcsParams: charges p, q must be non-negative");
    if (xi_mod < 0.0) throw ValidationError("KtcsParams: |xi| must be >= 0");
    if (!std::isfinite(xi_mod) || !std::isfinite(xi_arg))
        throw ValidationError("KtcsParams: xi must be finite");
}

double log_rho(long long n, int p, int q) {
    if (n < 0) throw DomainError("log_rho: n must be >= 0");
    if (p < 0 || q < 0) throw DomainError("log_rho: charges must be >= 0");
    return std::lgamma(static_cast<double>(n + p) + 1.0) +
           std::lgamma(static_cast<double>(n + q) + 1.0) +
           std::lgamma(static_cast<double>(n) + 1.0);
}

namespace detail {

void LogSum::add(double log_t) {
    if (!(log_t > -1e307)) return;  // treat -inf / underflow as zero term
    if (log_t > max_log) {
        scaled_sum = scaled_sum * std::exp(max_log - log_t) + 1.0;
        max_log = log_t;
    } else {
        scaled_sum += std::exp(log_t - max_log);
    }
}

double LogSum::value() const {
    if (scaled_sum <= 0.0) return 0.0;
    return std::exp(max_log) * scaled_sum;
}

double LogSum::log_value() const {
    if (scaled_sum <= 0.0) return -std::numeric_limits<double>::infinity();
    return max_log + std::log(scaled_sum);
}

}  // namespace detail

SeriesCache normalization_series(const KtcsParams& params, double z) {
    params.validate();
    if (z < 0.0 || !std::isfinite(z))
        throw DomainError("normalization_series: z must be finite and >= 0");

    const int K = params.K, j = params.j, p = params.p, q = params.q;
    SeriesCache out;
    out.z = z;

    if (z == 0.0) {
        // Only powers z^{Km+j} with Km+j in {0,1,2} touch S, dS, d2S at 0.
        out.S = (j == 0) ? std::exp(-log_rho(0, p, q)) : 0.0;
        auto power_hits = [&](long long target) -> bool {
            return target >= j && (target - j) % K == 0;
        };
        if (power_hits(1)) out.dS = std::exp(-log_rho(1, p, q));
        if (power_hits(2)) out.d2S = 2.0 * std::exp(-log_rho(2, p, q));
        out.log_S = (out.S > 0.0) ? std::log(out.S) : -std::numeric_limits<double>::infinity();
        out.terms_used = 1;
        return out;
    }

    const double log_z = std::log(z);
    detail::LogSum s0, s1, s2;
    double peak = -1e308;
    int m = 0;
    for (;; ++m) {
        const long long n = static_cast<long long>(K) * m + j;
        const double nf = static_cast<double>(n);
        const double log_t = nf * log_z - log_rho(n, p, q);
        s0.add(log_t);
        if (n >= 1) s1.add(log_t - log_z + std::log(nf));
        if (n >= 2) s2.add(log_t - 2.0 * log_z + std::log(nf) + std::log(nf - 1.0));
        peak = std::max(peak, log_t);
        // past the peak and below 1e-18 of the running sum: stop
        if (m > 1 && log_t < peak && log_t - s0.log_value() < std::log(1e-18)) break;
        if (m > 2000000)
            throw QuadratureNotConverged("normalization_series: series did not converge");
    }
    out.terms_used = m + 1;
    out.S = s0.value();
    out.dS = s1.value();
    out.d2S = s2.value();
    out.log_S = s0.log_value();
    return out;
}

double normalization_constant(const KtcsParams& params, double z) {
    const SeriesCache c = normalization_series(params, z);
    if (!(c.S > 0.0))
        throw NonNormalizable("normalization_constant: S(z) = 0 (z = 0 with j > 0)");
    return std::exp(-0.5 * c.log_S);
}

complexd series_s(const KtcsParams& params, complexd w) {
    params.validate();
    const int K = params.K, j = params.j, p = params.p, q = params.q;
    const double r = std::abs(w);
    if (r == 0.0) {
        return (j == 0) ? complexd{std::exp(-log_rho(0, p, q)), 0.0} : complexd{0.0, 0.0};
    }
    const double log_r = std::log(r);
    const double phi = std::arg(w);

    // magnitudes in the log domain with a running maximum, phases separate
    double max_log = -1e308;
    complexd scaled{0.0, 0.0};
    double peak = -1e308;
    for (int m = 0;; ++m) {
        const long long n = static_cast<long long>(K) * m + j;
        const double log_t = static_cast<double>(n) * log_r - log_rho(n, p, q);
        if (log_t > max_log) {
            scaled *= std::exp(max_log - log_t);
            max_log = log_t;
        }
        scaled += std::polar(std::exp(log_t - max_log), phi * static_cast<double>(n));
        peak = std::max(peak, log_t);
        // truncate relative to the largest term; cancellation below that
        // level is inherent to fixed precision
        if (m > 1 && log_t < peak && log_t - peak < std::log(1e-18)) break;
        if (m > 2000000) throw QuadratureNotConverged("series_s: series did not converge");
    }
    return scaled * std::exp(max_log);
}

int auto_n_max(const KtcsParams& params) {
    params.validate();
    const int K = params.K, j = params.j, p = params.p, q = params.q;
    const double z = params.z();
    if (z == 0.0) return j;  // delta distribution at n = j

    // Two truncation requirements. The dropped tail probability must stay
    // below 1e-14, and the last kept amplitudes must be small enough that
    // xi^K times them keeps the (abc)^K eigenvalue residual below ~1e-10:
    // residual^2 ~ z^K * K * P(top chain index).
    const double log_zK = static_cast<double>(K) * std::log(z);
    const double log_tail_target = std::log(1e-14);
    const double log_top_target = std::min(std::log(1e-14), std::log(1e-21) - log_zK);
    const double log_z = std::log(z);

    detail::LogSum sum;
    double peak = -1e308;
    long long n = j;
    for (int m = 0;; ++m, n += K) {
        const double log_t = static_cast<double>(n) * log_z - log_rho(n, p, q);
        sum.add(log_t);
        peak = std::max(peak, log_t);
        if (log_t < peak) {
            // ratio of consecutive chain terms, decreasing past the peak
            const double log_ratio =
                static_cast<double>(K) * log_z - (log_rho(n + K, p, q) - log_rho(n, p, q));
            if (log_ratio < 0.0) {
                const double ratio = std::exp(log_ratio);
                const double log_tail = log_t + log_ratio - std::log1p(-ratio);
                const double log_sum = sum.log_value();
                if (log_tail - log_sum < log_tail_target &&
                    log_t - log_sum < log_top_target)
                    return static_cast<int>(n);
            }
        }
        if (n > 5000000) throw QuadratureNotConverged("auto_n_max: no convergent truncation");
    }
}

TrioState build_ktcs(const KtcsParams& params, int n_max) {
    params.validate();
    const int K = params.K, j = params.j, p = params.p, q = params.q;
    const double z = params.z();

    if (n_max < 0) {
        n_max = auto_n_max(params);
    } else {
        // reject explicit truncations that drop more than 1e-8 of probability
        const SeriesCache full = normalization_series(params, z);
        if (!(full.S > 0.0))
            throw NonNormalizable("build_ktcs: zero-norm state (xi = 0 with j > 0)");
        detail::LogSum partial;
        const double log_z = (z > 0.0) ? std::log(z) : 0.0;
        for (long long n = j; n <= n_max; n += K) {
            const double log_t =
                (z > 0.0) ? static_cast<double>(n) * log_z - log_rho(n, p, q)
                          : ((n == 0) ? -log_rho(0, p, q) : -1e308);
            partial.add(log_t);
        }
        const double kept = std::exp(partial.log_value() - full.log_S);
        if (1.0 - kept > 1e-8)
            throw TruncationTooSmall("build_ktcs: requested n_max leaves tail > 1e-8");
    }

    if (params.xi_mod == 0.0 && j > 0)
        throw NonNormalizable("build_ktcs: xi = 0 with j > 0 has zero norm");

    TrioState state;
    state.K = K;
    state.j = j;
    state.p = p;
    state.q = q;
    state.xi = params.xi();
    state.n_max = n_max;
    state.amplitudes.assign(static_cast<size_t>(n_max) + 1, complexd{0.0, 0.0});

    if (params.xi_mod == 0.0) {
        state.amplitudes[0] = 1.0;  // vacuum chain element |q, p, 0>
        return state;
    }

    const double log_r = std::log(params.xi_mod);
    // amplitudes relative to the largest one, then normalize exactly
    double max_log = -1e308;
    std::vector<double> log_mag(static_cast<size_t>(n_max) + 1, -1e308);
    for (long long n = j; n <= n_max; n += K) {
        log_mag[static_cast<size_t>(n)] =
            static_cast<double>(n) * log_r - 0.5 * log_rho(n, p, q);
        max_log = std::max(max_log, log_mag[static_cast<size_t>(n)]);
    }
    double norm2 = 0.0;
    for (long long n = j; n <= n_max; n += K) {
        const double mag = std::exp(log_mag[static_cast<size_t>(n)] - max_log);
        state.amplitudes[static_cast<size_t>(n)] =
            std::polar(mag, params.xi_arg * static_cast<double>(n));
        norm2 += mag * mag;
    }
    const double inv_norm = 1.0 / std::sqrt(norm2);
    for (auto& a : state.amplitudes) a *= inv_norm;
    return state;
}

double TrioState::norm() const {
    double n2 = 0.0;
    for (const auto& a : amplitudes) n2 += std::norm(a);
    return std::sqrt(n2);
}

std::string TrioState::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"K\":" << K << ",\"j\":" << j << ",\"p\":" << p << ",\"q\":" << q
       << ",\"xi\":[" << xi.real() << "," << xi.imag() << "]"
       << ",\"n_max\":" << n_max << ",\"amplitudes\":[";
    for (size_t n = 0; n < amplitudes.size(); ++n) {
        if (n) os << ",";
        os << "[" << amplitudes[n].real() << "," << amplitudes[n].imag() << "]";
    }
    os << "]}";
    return os.str();
}

complexd overlap(const TrioState& a, const TrioState& b) {
    if (a.p != b.p || a.q != b.q) return {0.0, 0.0};  // disjoint Fock support
    complexd acc{0.0, 0.0};
    const size_t n_common = std::min(a.amplitudes.size(), b.amplitudes.size());
    for (size_t n = 0; n < n_common; ++n) acc += std::conj(a.amplitudes[n]) * b.amplitudes[n];
    return acc;
}

complexd overlap_closed_form(const KtcsParams& bra, const KtcsParams& ket) {
    bra.validate();
    ket.validate();
    if (bra.j != ket.j || bra.p != ket.p || bra.q != ket.q || bra.K != ket.K)
        return {0.0, 0.0};
    const double n_bra = normalization_constant(bra, bra.z());
    const double n_ket = normalization_constant(ket, ket.z());
    return n_bra * n_ket * series_s(ket, std::conj(bra.xi()) * ket.xi());
}

TrioState apply_abc(const TrioState& state, int times) {
    if (times < 0) throw DomainError("apply_abc: times must be >= 0");
    TrioState out = state;
    if (times == 0) return out;
    const int p = state.p, q = state.q;
    const size_t size = state.amplitudes.size();
    std::vector<complexd> cur = state.amplitudes;
    for (int t = 0; t < times; ++t) {
        std::vector<complexd> next(size, complexd{0.0, 0.0});
        for (size_t src = 1; src < size; ++src) {
            const double nn = static_cast<double>(src);
            const double factor = std::sqrt((nn + p) * (nn + q) * nn);
            next[src - 1] = cur[src] * factor;
        }
        cur.swap(next);
    }
    out.amplitudes = std::move(cur);
    // the residue class shifts down by `times` mod K
    out.j = static_cast<int>(((state.j - times) % state.K + state.K) % state.K);
    return out;
}

double eigen_residual(const TrioState& state) {
    const TrioState lowered = apply_abc(state, state.K);
    const complexd lambda = std::pow(state.xi, state.K);
    double acc = 0.0;
    for (size_t n = 0; n < state.amplitudes.size(); ++n) {
        acc += std::norm(lowered.amplitudes[n] - lambda * state.amplitudes[n]);
    }
    return std::sqrt(acc);
}

}  // namespace ktcs
