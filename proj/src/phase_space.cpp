#include "ktcs/phase_space.hpp"

#include <cmath>

namespace ktcs {

namespace {
constexpr double pi = 3.14159265358979323846;
constexpr double pi_cubed = pi * pi * pi;
}  // namespace

double QGrid::max_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
}

double q_point(const KtcsParams& params, complexd alpha, complexd beta, complexd gamma) {
    params.validate();
    const TrioState state = build_ktcs(params);

    // <alpha,beta,gamma | state> = sum_n c_n conj(alpha)^{n+q} conj(beta)^{n+p}
    //                              conj(gamma)^n e^{-(|a|^2+|b|^2+|g|^2)/2}/sqrt(rho(n))
    const complexd ca = std::conj(alpha), cb = std::conj(beta), cg = std::conj(gamma);
    const double e2 = std::norm(alpha) + std::norm(beta) + std::norm(gamma);

    // log-magnitude form: factor out the largest term magnitude
    const double ra = std::abs(ca), rb = std::abs(cb), rg = std::abs(cg);
    complexd scaled{0.0, 0.0};
    double max_log = -1e308;
    for (long long n = params.j; n <= state.n_max; n += params.K) {
        const complexd c = state.amplitudes[static_cast<size_t>(n)];
        if (c == complexd{0.0, 0.0}) continue;
        double log_mag = std::log(std::abs(c)) - 0.5 * log_rho(n, params.p, params.q);
        double phase = std::arg(c);
        if (ra > 0.0) log_mag += (n + params.q) * std::log(ra);
        phase += (n + params.q) * std::arg(ca);
        if (rb > 0.0) log_mag += (n + params.p) * std::log(rb);
        phase += (n + params.p) * std::arg(cb);
        if (rg > 0.0) log_mag += n * std::log(rg);
        phase += n * std::arg(cg);
        if ((ra == 0.0 && n + params.q > 0) || (rb == 0.0 && n + params.p > 0) ||
            (rg == 0.0 && n > 0))
            continue;  // a zero coherent amplitude kills this term
        if (log_mag > max_log) {
            scaled *= std::exp(max_log - log_mag);
            max_log = log_mag;
        }
        scaled += std::polar(std::exp(log_mag - max_log), phase);
    }
    if (max_log < -1e307) return 0.0;
    const double log_abs = max_log + std::log(std::max(std::abs(scaled), 1e-300)) - 0.5 * e2;
    const double overlap_abs = std::exp(log_abs);
    return overlap_abs * overlap_abs / pi_cubed;
}

double q_slice_point(const KtcsParams& params, double x, double y) {
    params.validate();
    const double r2 = x * x + y * y;
    const complexd w = params.xi() * std::pow(complexd{x, -y}, 3);

    const SeriesCache cache = normalization_series(params, params.z());
    if (!(cache.S > 0.0))
        throw NonNormalizable("q_slice_point: state not normalizable");
    const complexd s = series_s(params, w);

    // pi^3 Q = N^2 e^{-3 r^2} (r^2)^{p+q} |S(w)|^2, assembled in logs
    const double s_abs = std::abs(s);
    if (s_abs == 0.0) return 0.0;
    double log_q = -cache.log_S - 3.0 * r2 + 2.0 * std::log(s_abs);
    if (params.p + params.q > 0) {
        if (r2 == 0.0) return 0.0;
        log_q += (params.p + params.q) * std::log(r2);
    }
    return std::exp(log_q);
}

QGrid q_slice(const KtcsParams& params, const QGridSpec& spec) {
    if (spec.nx < 2 || spec.ny < 2)
        throw ValidationError("q_slice: grid must be at least 2x2");
    if (!(spec.x_max > spec.x_min) || !(spec.y_max > spec.y_min))
        throw ValidationError("q_slice: empty window");
    QGrid grid;
    grid.spec = spec;
    grid.values.assign(static_cast<size_t>(spec.nx) * spec.ny, 0.0);
    for (int iy = 0; iy < spec.ny; ++iy) {
        const double y = grid.y_of(iy);
        for (int ix = 0; ix < spec.nx; ++ix) {
            grid.values[static_cast<size_t>(iy) * spec.nx + ix] =
                q_slice_point(params, grid.x_of(ix), y);
        }
    }
    return grid;
}

QGridSpec default_window(const KtcsParams& params, int n) {
    const double ring = std::cbrt(std::max(params.xi_mod, 1e-3));
    const double half = 1.6 * ring * 1.5;
    QGridSpec spec;
    spec.x_min = -half;
    spec.x_max = half;
    spec.y_min = -half;
    spec.y_max = half;
    spec.nx = n;
    spec.ny = n;
    return spec;
}

int count_peaks(const QGrid& grid, double floor) {
    if (grid.spec.nx < 200 || grid.spec.ny < 200)
        throw ResolutionTooCoarse("count_peaks: need at least a 200x200 grid");
    const double cutoff = floor * grid.max_value();
    int peaks = 0;
    for (int iy = 1; iy + 1 < grid.spec.ny; ++iy) {
        for (int ix = 1; ix + 1 < grid.spec.nx; ++ix) {
            const double v = grid.at(ix, iy);
            if (v <= cutoff) continue;
            bool strict_max = true;
            for (int dy = -1; dy <= 1 && strict_max; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (grid.at(ix + dx, iy + dy) >= v) {
                        strict_max = false;
                        break;
                    }
                }
            }
            if (strict_max) ++peaks;
        }
    }
    return peaks;
}

}  // namespace ktcs
