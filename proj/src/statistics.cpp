#include "ktcs/statistics.hpp"

#include <cmath>

namespace ktcs {

namespace {

// falling factorial x^(l) = x (x-1) ... (x-l+1)
double falling(double x, int l) {
    double acc = 1.0;
    for (int i = 0; i < l; ++i) acc *= (x - i);
    return acc;
}

struct NDerivatives {
    double N, N1, N2;  // N, dN/dz, d2N/dz2
};

NDerivatives n_derivatives(const KtcsParams& params, double z) {
    const SeriesCache c = normalization_series(params, z);
    if (!(c.S > 0.0))
        throw NonNormalizable("statistics: S(z) = 0, state not normalizable");
    NDerivatives d;
    d.N = std::exp(-0.5 * c.log_S);
    d.N1 = -0.5 * c.dS * d.N / c.S;
    d.N2 = (0.75 * c.dS * c.dS / (c.S * c.S) - 0.5 * c.d2S / c.S) * d.N;
    return d;
}

double mean_occupation(const KtcsParams& params, ModeId mode, double z) {
    const double m1 = factorial_moment(params, mode, 1, z);
    if (m1 < 1e-300)
        throw DegenerateMean("mandel: mean occupation underflowed");
    return m1;
}

}  // namespace

int charge_offset(ModeId mode, const KtcsParams& params) {
    switch (mode) {
        case ModeId::a: return params.q;
        case ModeId::b: return params.p;
        case ModeId::c: return 0;
    }
    throw ValidationError("charge_offset: bad mode");
}

double number_distribution(const KtcsParams& params, long long n) {
    params.validate();
    if (n < 0) throw DomainError("number_distribution: n must be >= 0");
    if ((n - params.j) % params.K != 0) return 0.0;  // gate function I((n-j)/K)
    const double z = params.z();
    const SeriesCache c = normalization_series(params, z);
    if (!(c.S > 0.0)) {
        // xi = 0 with j > 0: zero-norm family; the only sensible value is a
        // delta on the lowest chain element, which does not exist here
        throw NonNormalizable("number_distribution: state not normalizable");
    }
    if (z == 0.0) return (n == 0) ? 1.0 : 0.0;
    const double log_p =
        static_cast<double>(n) * std::log(z) - log_rho(n, params.p, params.q) - c.log_S;
    return std::exp(log_p);
}

double factorial_moment(const KtcsParams& params, ModeId mode, int l, double z) {
    if (l < 1) throw ValidationError("factorial_moment: l must be >= 1");
    const int off = charge_offset(mode, params);
    return series_weighted_mean(params, z, [off, l](long long n) {
        return falling(static_cast<double>(n + off), l);
    });
}

double joint_factorial_moment(const KtcsParams& params, ModeId x, ModeId y, int l, int m,
                              double z) {
    if (l < 1 || m < 1)
        throw ValidationError("joint_factorial_moment: orders must be >= 1");
    if (x == y) throw ValidationError("joint_factorial_moment: modes must differ");
    const int ox = charge_offset(x, params);
    const int oy = charge_offset(y, params);
    return series_weighted_mean(params, z, [ox, oy, l, m](long long n) {
        return falling(static_cast<double>(n + ox), l) * falling(static_cast<double>(n + oy), m);
    });
}

MandelTriple mandel(const KtcsParams& params, double z) {
    params.validate();
    if (!(z > 0.0)) throw DomainError("mandel: z must be > 0 (small-z limits at z = 1e-8)");

    // moment route
    auto mandel_of = [&](ModeId mode) {
        const double m1 = mean_occupation(params, mode, z);
        const double m2 = factorial_moment(params, mode, 2, z);
        return (m2 - m1 * m1) / m1;
    };
    const double ma_m = mandel_of(ModeId::a);
    const double mb_m = mandel_of(ModeId::b);
    const double mc_m = mandel_of(ModeId::c);

    // explicit closed forms in N, N', N''
    const NDerivatives d = n_derivatives(params, z);
    const double N = d.N, N1 = d.N1, N2 = d.N2;
    const double p = params.p, q = params.q;
    const double curv = N * N2 - N1 * N1;
    const double ma_c = (2.0 * z * z * curv + q * N * N) / (2.0 * z * N * N1 - q * N * N);
    const double mb_c = (2.0 * z * z * curv + p * N * N) / (2.0 * z * N * N1 - p * N * N);
    const double mc_c = z * curv / (N * N1);

    MandelTriple out;
    out.z = z;
    out.Ma = ma_c;
    out.Mb = mb_c;
    out.Mc = mc_c;
    out.path_discrepancy = std::max({std::abs(ma_c - ma_m) / std::max(1.0, std::abs(ma_m)),
                                     std::abs(mb_c - mb_m) / std::max(1.0, std::abs(mb_m)),
                                     std::abs(mc_c - mc_m) / std::max(1.0, std::abs(mc_m))});
    return out;
}

MandelTriple mandel_limit_z0(const KtcsParams& params) {
    const double z = 1e-8;
    const MandelTriple f1 = mandel(params, z);
    const MandelTriple f2 = mandel(params, 2.0 * z);
    MandelTriple out;
    out.z = 0.0;
    out.Ma = 2.0 * f1.Ma - f2.Ma;
    out.Mb = 2.0 * f1.Mb - f2.Mb;
    out.Mc = 2.0 * f1.Mc - f2.Mc;
    out.path_discrepancy = std::max(f1.path_discrepancy, f2.path_discrepancy);
    return out;
}

CsiMeasures csi_measures(const KtcsParams& params, double z) {
    params.validate();
    if (!(z > 0.0)) throw DomainError("csi_measures: z must be > 0");

    // moment route
    const double na2 = factorial_moment(params, ModeId::a, 2, z);
    const double nb2 = factorial_moment(params, ModeId::b, 2, z);
    const double nc2 = factorial_moment(params, ModeId::c, 2, z);
    const double nab = joint_factorial_moment(params, ModeId::a, ModeId::b, 1, 1, z);
    const double nac = joint_factorial_moment(params, ModeId::a, ModeId::c, 1, 1, z);
    const double nbc = joint_factorial_moment(params, ModeId::b, ModeId::c, 1, 1, z);
    if (nab < 1e-300 || nac < 1e-300 || nbc < 1e-300)
        throw DegenerateMean("csi_measures: joint occupation underflowed");

    CsiMeasures out;
    out.z = z;
    out.J_ab = na2 * nb2 - nab * nab;
    out.J_ac = na2 * nc2 - nac * nac;
    out.J_bc = nb2 * nc2 - nbc * nbc;
    out.G_ab = out.J_ab / (nab * nab);
    out.G_ac = out.J_ac / (nac * nac);
    out.G_bc = out.J_bc / (nbc * nbc);

    // explicit printed closed forms
    const NDerivatives d = n_derivatives(params, z);
    const double N = d.N, N1 = d.N1, N2 = d.N2;
    const double p = params.p, q = params.q;

    const double jab =
        std::pow(N, -3.0) *
        (p * q * (1.0 - p - q) * N * N * N + 24.0 * z * z * z * N1 * N1 * N1 -
         2.0 * z * z * N * N1 *
             ((2.0 + 7.0 * (p + q) - (p - q) * (p - q)) * N1 + 4.0 * z * N2) +
         2.0 * z * N * N *
             (6.0 * p * q * N1 + z * (p + q - (p - q) * (p - q)) * N2));
    const double jac =
        2.0 * z * z * std::pow(N, -3.0) *
        (12.0 * z * N1 * N1 * N1 + q * (1.0 - q) * N * N * N2 -
         N * N1 * ((2.0 + 7.0 * q - q * q) * N1 + 4.0 * z * N2));
    const double jbc =
        2.0 * z * z * std::pow(N, -3.0) *
        (12.0 * z * N1 * N1 * N1 + p * (1.0 - p) * N * N * N2 -
         N * N1 * ((2.0 + 7.0 * p - p * p) * N1 + 4.0 * z * N2));

    out.J_ab_closed = jab;
    out.J_ac_closed = jac;
    out.J_bc_closed = jbc;

    // scale each difference by the magnitude of the terms being subtracted
    auto rel = [](double a, double b, double scale) {
        return std::abs(a - b) / std::max(scale, 1e-300);
    };
    out.path_discrepancy =
        std::max({rel(jab, out.J_ab, na2 * nb2 + nab * nab),
                  rel(jac, out.J_ac, na2 * nc2 + nac * nac),
                  rel(jbc, out.J_bc, nb2 * nc2 + nbc * nbc)});
    return out;
}

double find_crossover(const KtcsParams& params, ModeId mode, double z_hi) {
    params.validate();
    if (!(z_hi > 1e-3)) throw ValidationError("find_crossover: z_hi must exceed 1e-3");

    auto m_of = [&](double z) {
        const MandelTriple t = mandel(params, z);
        switch (mode) {
            case ModeId::a: return t.Ma;
            case ModeId::b: return t.Mb;
            case ModeId::c: return t.Mc;
        }
        return 0.0;
    };

    // multiplicative scan for a sign change
    double lo = 1e-3;
    double f_lo = m_of(lo);
    double hi = lo;
    bool bracketed = false;
    while (hi < z_hi) {
        hi = std::min(hi * 1.2, z_hi);
        const double f_hi = m_of(hi);
        if (f_lo == 0.0) return lo;
        if ((f_lo > 0.0) != (f_hi > 0.0)) {
            bracketed = true;
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    if (!bracketed)
        throw NoSignChange("find_crossover: Mandel parameter has one sign on (0, z_hi]");

    while (hi - lo > 1e-5) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = m_of(mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace ktcs
