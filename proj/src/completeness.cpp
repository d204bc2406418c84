#include "ktcs/completeness.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace ktcs {

namespace {

constexpr double pi = 3.14159265358979323846;
constexpr double euler_gamma = 0.57721566490153286061;

// ascending series for K_0 and K_1, reliable for x <= 2
double bessel_k0_series(double x) {
    const double t = 0.25 * x * x;
    double term = 1.0;      // t^k/(k!)^2
    double i0 = 1.0;        // I_0
    double hsum = 0.0;      // sum H_k t^k/(k!)^2
    double hk = 0.0;
    for (int k = 1; k < 200; ++k) {
        term *= t / (static_cast<double>(k) * k);
        hk += 1.0 / k;
        i0 += term;
        hsum += term * hk;
        if (term < 1e-19 * i0) break;
    }
    return -(std::log(0.5 * x) + euler_gamma) * i0 + hsum;
}

double bessel_k1_series(double x) {
    const double t = 0.25 * x * x;
    // I_1 = (x/2) sum t^k/(k!(k+1)!)
    double term = 1.0;  // t^k/(k!(k+1)!)
    double i1s = 1.0;
    double hsum = 1.0;  // sum (H_k + H_{k+1}) t^k/(k!(k+1)!)
    double hk = 0.0, hk1 = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= t / (static_cast<double>(k) * (k + 1));
        hk += 1.0 / k;
        hk1 += 1.0 / (k + 1);
        i1s += term;
        hsum += term * (hk + hk1);
        if (term < 1e-19 * i1s) break;
    }
    const double i1 = 0.5 * x * i1s;
    return 1.0 / x + std::log(0.5 * x) * i1 - 0.25 * x * (hsum - 2.0 * euler_gamma * i1s);
}

// Thompson-Barnett continued fraction (CF2) for K_0, K_1 at x > 2
void bessel_k01_cf(double x, double& k0, double& k1) {
    const double eps = 1e-16;
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25;  // 1/4 - mu^2 with mu = 0
    double q = a1, c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= 30000; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < eps) {
            h = a1 * h;
            k0 = std::sqrt(pi / (2.0 * x)) * std::exp(-x) / s;
            k1 = k0 * (x + 0.5 - h) / x;
            return;
        }
    }
    throw QuadratureNotConverged("bessel_k: continued fraction did not converge");
}

// ---- adaptive Simpson (recursive interval halving with Richardson) ----

struct AdaptiveCtx {
    const std::function<double(double)>* f;
    long long evals = 0;
    long long eval_budget = 8000000;
};

double adaptive_simpson_rec(AdaptiveCtx& ctx, double a, double fa, double m, double fm,
                            double b, double fb, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = (*ctx.f)(lm);
    const double frm = (*ctx.f)(rm);
    ctx.evals += 2;
    if (ctx.evals > ctx.eval_budget)
        throw QuadratureNotConverged("adaptive Simpson: evaluation budget exhausted");
    const double sl = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double sr = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double split = sl + sr;
    if (depth <= 0) return split;
    if (std::abs(split - whole) <= 15.0 * tol) return split + (split - whole) / 15.0;
    return adaptive_simpson_rec(ctx, a, fa, lm, flm, m, fm, sl, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(ctx, m, fm, rm, frm, b, fb, sr, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol_abs, long long& evals_out) {
    AdaptiveCtx ctx;
    ctx.f = &f;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    ctx.evals = 3;
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double out =
        adaptive_simpson_rec(ctx, a, fa, 0.5 * (a + b), fm, b, fb, whole, tol_abs, 48);
    evals_out += ctx.evals;
    return out;
}

// Integrand of W~ after t = u^2. The overall normalization is pinned by the
// moment condition: integral W~(x) x^n dx must equal (n+p)!(n+q)!n! exactly,
// which fixes the prefactor to 4 = 2 (from dt = 2u du) * 2 (from the
// K-Bessel representation of the inner Parseval integral).
double weight_integrand(double u, double x, int p, int q) {
    if (u <= 0.0) return 0.0;
    const double damp = -x / (u * u) - 2.0 * u;  // crude magnitude guard
    if (damp < -740.0) return 0.0;
    const double gate = std::exp(-x / (u * u));
    if (gate == 0.0) return 0.0;
    return 4.0 * std::pow(u, p + q - 1) * gate * bessel_k(std::abs(q - p), 2.0 * u);
}

}  // namespace

double bessel_k(int order, double x) {
    if (!(x > 0.0)) throw DomainError("bessel_k: requires x > 0");
    order = std::abs(order);  // K_{-n} = K_n

    double k0, k1;
    if (x <= 2.0) {
        k0 = bessel_k0_series(x);
        k1 = bessel_k1_series(x);
    } else {
        bessel_k01_cf(x, k0, k1);
    }
    if (order == 0) return k0;
    if (order == 1) return k1;
    // upward recurrence, stable for K
    double km = k0, k = k1;
    for (int n = 1; n < order; ++n) {
        const double kp = km + (2.0 * n / x) * k;
        km = k;
        k = kp;
    }
    return k;
}

double weight_tilde(double x, int p, int q) {
    if (!(x > 0.0)) throw DomainError("weight_tilde: requires x > 0");
    if (p < 0 || q < 0) throw DomainError("weight_tilde: charges must be >= 0");

    // Support: e^{-x/u^2} opens at u ~ sqrt(x/740), K(2u) closes the far
    // tail. Scan log-spaced nodes for the peak, trim both ends where the
    // integrand falls below 1e-16 of it, then integrate adaptively (the
    // turn-on layer is steep and defeats uniform panels).
    const std::function<double(double)> f = [&](double u) {
        return weight_integrand(u, x, p, q);
    };

    double u_lo = std::max(std::sqrt(x / 745.0), 1e-9);
    double u_hi = std::max(60.0, 3.0 * std::cbrt(x));
    double peak = 0.0;
    {
        const int scan = 96;
        const double ratio = std::log(u_hi / u_lo);
        std::vector<double> vals(scan + 1);
        for (int i = 0; i <= scan; ++i) {
            const double u = u_lo * std::exp(ratio * i / scan);
            vals[static_cast<size_t>(i)] = f(u);
            peak = std::max(peak, vals[static_cast<size_t>(i)]);
        }
        if (peak <= 0.0)
            throw QuadratureNotConverged("weight_tilde: integrand vanished on the scan window");
        int lo_i = 0;
        while (lo_i < scan && vals[static_cast<size_t>(lo_i)] < 1e-16 * peak) ++lo_i;
        int hi_i = scan;
        while (hi_i > 0 && vals[static_cast<size_t>(hi_i)] < 1e-16 * peak) --hi_i;
        const double new_lo = u_lo * std::exp(ratio * std::max(0, lo_i - 1) / scan);
        double new_hi = u_lo * std::exp(ratio * std::min(scan, hi_i + 1) / scan);
        while (f(new_hi) > 1e-16 * peak) new_hi *= 1.3;
        u_lo = new_lo;
        u_hi = new_hi;
    }

    long long evals = 0;
    // absolute tolerance proportional to a crude scale of the integral
    const double scale = peak * std::max(u_hi - u_lo, 1.0);
    const double value = adaptive_simpson(f, u_lo, u_hi, 1e-10 * scale, evals);
    if (!(value > 0.0) || !std::isfinite(value))
        throw QuadratureNotConverged("weight_tilde: quadrature returned a non-positive value");
    return value;
}

double weight_full(const KtcsParams& params, double r2) {
    params.validate();
    const SeriesCache c = normalization_series(params, r2);
    if (!(c.S > 0.0))
        throw NonNormalizable("weight_full: N undefined at this z");
    // W~/(pi N^2) = W~ S / pi
    return weight_tilde(r2, params.p, params.q) * c.S / pi;
}

MomentReport verify_moments(const MomentProblem& problem) {
    if (problem.n_max_check > 10)
        throw ValidationError("verify_moments: n_max_check above the double-precision budget (10)");
    if (problem.n_max_check < 0 || problem.p < 0 || problem.q < 0)
        throw ValidationError("verify_moments: bad problem");

    MomentReport report;
    report.problem = problem;
    for (int n = 0; n <= problem.n_max_check; ++n) {
        // substitute x = v^3: integral = 3 integral v^{3n+2} W~(v^3) dv,
        // which turns the e^{-3 x^{1/3}} tail into a plain exponential
        const std::function<double(double)> g = [&](double v) {
            if (v <= 0.0) return 0.0;
            const double x = v * v * v;
            return 3.0 * std::pow(v, 3 * n + 2) * weight_tilde(x, problem.p, problem.q);
        };

        // peak near v = n + (p+q+2)/3; extend until the integrand is dead
        const double v_peak =
            std::max(1.0, static_cast<double>(n) + (problem.p + problem.q + 2) / 3.0);
        const double g_peak = g(v_peak);
        double v_hi = 2.0 * v_peak + 10.0;
        while (g(v_hi) > 1e-18 * g_peak) v_hi += 3.0;

        const double expected = std::exp(log_rho(n, problem.p, problem.q));
        long long evals = 0;
        const double value = adaptive_simpson(g, 1e-8, v_hi, 3e-10 * expected, evals);
        MomentEntry e;
        e.n = n;
        e.computed = value;
        e.expected = expected;
        e.rel_error = std::abs(value - expected) / expected;
        report.entries.push_back(e);
        report.worst_rel_error = std::max(report.worst_rel_error, e.rel_error);
        report.quadrature_nodes += evals;
    }
    if (report.worst_rel_error > problem.tolerance) {
        std::ostringstream os;
        os << "verify_moments: worst relative error " << report.worst_rel_error
           << " exceeds tolerance " << problem.tolerance << " for p=" << problem.p
           << " q=" << problem.q;
        throw MomentMismatch(os.str());
    }
    return report;
}

std::string MomentReport::to_json() const {
    std::ostringstream os;
    os.precision(16);
    os << "{\"p\":" << problem.p << ",\"q\":" << problem.q
       << ",\"tolerance\":" << problem.tolerance
       << ",\"quadrature_nodes\":" << quadrature_nodes
       << ",\"worst_rel_error\":" << worst_rel_error << ",\"moments\":[";
    for (size_t i = 0; i < entries.size(); ++i) {
        if (i) os << ",";
        os << "{\"n\":" << entries[i].n << ",\"computed\":" << entries[i].computed
           << ",\"expected\":" << entries[i].expected
           << ",\"rel_error\":" << entries[i].rel_error << "}";
    }
    os << "]}";
    return os.str();
}

KernelCheckResult reproducing_kernel_check(const KtcsParams& params, int radial_nodes,
                                           int angular_nodes, double r_max) {
    params.validate();
    if (radial_nodes < 8 || angular_nodes < 8)
        throw ValidationError("reproducing_kernel_check: grid too small");
    if (radial_nodes % 2 != 0)
        throw ValidationError("reproducing_kernel_check: radial_nodes must be even (Simpson)");
    if (params.xi_mod <= 0.0)
        throw ValidationError("reproducing_kernel_check: needs xi != 0");

    const int n_max = auto_n_max(params);
    const TrioState direct = build_ktcs(params, n_max);
    const double n_xi = normalization_constant(params, params.z());

    // The integrand per amplitude n is
    //   W_{Kj}(r'^2) <xi'|xi> c_n(xi')
    //     = [W~/(pi N'^2)] [N' N S(conj(xi') xi)] [N' xi'^n/sqrt(rho(n))]
    //     = (W~/pi) N S(conj(xi') xi) xi'^n / sqrt(rho(n)),
    // so the member normalization cancels exactly. Radial nodes follow a
    // graded mesh s = sigma^{3/2} with s = x^{1/3} (x = r'^2): the grading
    // tames the ln^2 x behavior of the weight at the origin, and the
    // s-variable matches the e^{-3 x^{1/3}} decay of the far tail.
    // r' dr' = (3/2) s^2 ds = (9/4) s^2 sqrt(sigma) d sigma.
    const double s_max = std::pow(r_max * r_max, 1.0 / 3.0);
    const double sigma_max = std::pow(s_max, 2.0 / 3.0);
    const double dsg = sigma_max / radial_nodes;

    // accumulate every n, including off-residue ones: the angular sum is
    // what suppresses those, and we report how well it does
    std::vector<complexd> rec(static_cast<size_t>(n_max) + 1, complexd{0.0, 0.0});
    for (int ir = 1; ir <= radial_nodes; ++ir) {
        // composite Simpson in sigma (the ir = 0 endpoint integrand vanishes)
        const double sigma = dsg * ir;
        const double s = std::pow(sigma, 1.5);
        const double x = s * s * s;  // = r'^2
        const double rp = std::pow(s, 1.5);
        double simpson_w = (ir % 2 == 1) ? 4.0 / 3.0 : 2.0 / 3.0;
        if (ir == radial_nodes) simpson_w = 1.0 / 3.0;
        const double wt_radial = 2.25 * s * s * std::sqrt(sigma) * dsg * simpson_w;
        const double wtilde = weight_tilde(x, params.p, params.q);
        for (int ia = 0; ia < angular_nodes; ++ia) {
            const double phi = 2.0 * pi * ia / angular_nodes;
            const complexd xi_prime = std::polar(rp, phi);
            const complexd s_cross = series_s(params, std::conj(xi_prime) * params.xi());
            const complexd common = wt_radial * (2.0 * pi / angular_nodes) * (wtilde / pi) *
                                    n_xi * s_cross;
            complexd pow_xi{1.0, 0.0};
            for (int n = 0; n <= n_max; ++n) {
                rec[static_cast<size_t>(n)] +=
                    common * pow_xi * std::exp(-0.5 * log_rho(n, params.p, params.q));
                pow_xi *= xi_prime;
            }
        }
    }

    KernelCheckResult out;
    out.radial_nodes = radial_nodes;
    out.angular_nodes = angular_nodes;
    for (int n = 0; n <= n_max; ++n) {
        const bool on_class = (n >= params.j) && ((n - params.j) % params.K == 0);
        if (on_class) {
            const complexd d =
                rec[static_cast<size_t>(n)] - direct.amplitudes[static_cast<size_t>(n)];
            out.max_residual = std::max(out.max_residual, std::abs(d));
        } else {
            out.max_off_residue =
                std::max(out.max_off_residue, std::abs(rec[static_cast<size_t>(n)]));
        }
    }
    return out;
}

std::vector<std::vector<double>> unity_deviation(int K, int p, int q, int n_sub,
                                                 int radial_nodes, int angular_nodes) {
    if (K < 1 || p < 0 || q < 0 || n_sub < 0)
        throw ValidationError("unity_deviation: bad arguments");
    if (radial_nodes < 8 || angular_nodes < 2 * (n_sub + 1))
        throw ValidationError("unity_deviation: grid too small for requested submatrix");

    // Entries of sum_j integral d^2 xi |xi>_{Kj} W_{Kj} <xi|_{Kj} on the
    // chain basis. With c_n(xi) = N xi^n/sqrt(rho(n)) restricted to the
    // residue class, and W_{Kj} N^2 = W~/pi,
    //   M[n][m] = [n == m mod K] * (1/pi) * integral r dr W~(r^2) r^{n+m}
    //             * integral dphi e^{i(n-m)phi} / sqrt(rho(n) rho(m)).
    // Radial nodes uniform in s = x^{1/3}: r dr = (3/2) s^2 ds.
    const double s_max = 3.0 * n_sub + 12.0;

    if (radial_nodes % 2 != 0)
        throw ValidationError("unity_deviation: radial_nodes must be even (Simpson)");
    std::vector<double> radial_moment(static_cast<size_t>(2 * n_sub) + 1, 0.0);
    const double sigma_max = std::pow(s_max, 2.0 / 3.0);
    const double dsg = sigma_max / radial_nodes;
    for (int ir = 1; ir <= radial_nodes; ++ir) {
        // graded mesh s = sigma^{3/2}, Simpson in sigma (s = 0 term vanishes)
        const double sigma = dsg * ir;
        const double s = std::pow(sigma, 1.5);
        const double x = s * s * s;  // = r^2
        double simpson_w = (ir % 2 == 1) ? 4.0 / 3.0 : 2.0 / 3.0;
        if (ir == radial_nodes) simpson_w = 1.0 / 3.0;
        const double wt =
            2.25 * s * s * std::sqrt(sigma) * dsg * simpson_w * weight_tilde(x, p, q) / pi;
        double rpow = 1.0;  // r^{k} = x^{k/2}
        for (int k = 0; k <= 2 * n_sub; ++k) {
            radial_moment[static_cast<size_t>(k)] += wt * rpow;
            rpow *= std::sqrt(x);
        }
    }

    std::vector<std::vector<double>> dev(
        static_cast<size_t>(n_sub) + 1, std::vector<double>(static_cast<size_t>(n_sub) + 1, 0.0));
    for (int n = 0; n <= n_sub; ++n) {
        for (int m = 0; m <= n_sub; ++m) {
            // angular quadrature of e^{i(n-m)phi}, kept numeric on purpose
            complexd ang{0.0, 0.0};
            for (int ia = 0; ia < angular_nodes; ++ia)
                ang += std::polar(1.0, 2.0 * pi * (n - m) * ia / angular_nodes);
            ang *= 2.0 * pi / static_cast<double>(angular_nodes);
            complexd entry{0.0, 0.0};
            if (((n - m) % K) == 0) {
                // the 1/pi of the weight already sits inside radial_moment
                entry = ang * radial_moment[static_cast<size_t>(n + m)] *
                        std::exp(-0.5 * (log_rho(n, p, q) + log_rho(m, p, q)));
            }
            const double target = (n == m) ? 1.0 : 0.0;
            dev[static_cast<size_t>(n)][static_cast<size_t>(m)] = std::abs(entry - target);
        }
    }
    return dev;
}

CarlemanResult carleman_test(int K, int j, int p, int q, long long n_probe) {
    if (K < 1 || j < 0 || j >= K || p < 0 || q < 0)
        throw ValidationError("carleman_test: bad arguments");
    if (n_probe < 10000)
        throw ValidationError("carleman_test: n_probe must be at least 1e4");

    auto log_s_n = [&](long long n) {
        return -log_rho(static_cast<long long>(K) * n + j, p, q) / (2.0 * static_cast<double>(n));
    };
    auto ratio = [&](long long n) {
        return log_s_n(n) / std::log(static_cast<double>(n));
    };

    CarlemanResult out;
    out.ratio_at_probe = ratio(n_probe);
    const long long n_lo = n_probe / 100;
    out.estimate = (log_s_n(n_probe) - log_s_n(n_lo)) /
                   (std::log(static_cast<double>(n_probe)) - std::log(static_cast<double>(n_lo)));
    out.non_unique = out.estimate < -1.0;
    return out;
}

}  // namespace ktcs
