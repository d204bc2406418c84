#include "ktcs/transforms.hpp"

#include <cmath>

namespace ktcs {

namespace {
constexpr double two_pi = 6.283185307179586476925286766559;

complexd unit_phase(double angle) { return std::polar(1.0, angle); }

// mode amplitude ladder eta^n / sqrt(n!), built iteratively
std::vector<complexd> coherent_ladder(complexd eta, int n_top) {
    std::vector<complexd> f(static_cast<size_t>(n_top) + 1);
    f[0] = 1.0;
    for (int n = 1; n <= n_top; ++n)
        f[static_cast<size_t>(n)] =
            f[static_cast<size_t>(n - 1)] * eta / std::sqrt(static_cast<double>(n));
    return f;
}
}  // namespace

int bracket_k(int x, int K) {
    if (K < 1) throw ValidationError("bracket_k: K must be >= 1");
    return (x >= 0) ? x : x + K;
}

TrioState rotate_index(const TrioState& state, int target_l) {
    if (target_l < 0 || target_l >= state.K)
        throw IndexOutOfRange("rotate_index: target index must satisfy 0 <= l < K");
    const int d = bracket_k(state.j - target_l, state.K);
    if (d == 0) return state;  // xi^0 (abc)^0 = identity
    if (std::abs(state.xi) == 0.0)
        throw NonNormalizable("rotate_index: undefined at xi = 0 for l != m");

    KtcsParams src;
    src.xi_mod = std::abs(state.xi);
    src.xi_arg = std::arg(state.xi);
    src.p = state.p;
    src.q = state.q;
    src.K = state.K;
    src.j = state.j;
    KtcsParams dst = src;
    dst.j = target_l;

    const double n_dst = normalization_constant(dst, dst.z());
    const double n_src = normalization_constant(src, src.z());
    const complexd scale = (n_dst / n_src) * std::pow(state.xi, -d);

    TrioState out = apply_abc(state, d);
    for (auto& a : out.amplitudes) a *= scale;
    return out;
}

TcsSuperposition ktcs_to_tcs(const KtcsParams& params) {
    params.validate();
    const int K = params.K, j = params.j;
    KtcsParams tcs = params;
    tcs.K = 1;
    tcs.j = 0;

    const double n_kj = normalization_constant(params, params.z());
    const double n_tcs = normalization_constant(tcs, tcs.z());

    TcsSuperposition out;
    out.coefficients.resize(static_cast<size_t>(K));
    out.phases.resize(static_cast<size_t>(K));
    for (int jp = 0; jp < K; ++jp) {
        out.coefficients[static_cast<size_t>(jp)] =
            (n_kj / (K * n_tcs)) * unit_phase(-two_pi * j * jp / K);
        out.phases[static_cast<size_t>(jp)] = params.xi() * unit_phase(two_pi * jp / K);
    }
    return out;
}

std::vector<std::pair<complexd, KtcsParams>> tcs_to_ktcs(complexd xi, int p, int q, int K) {
    if (K < 1) throw ValidationError("tcs_to_ktcs: K must be >= 1");
    if (std::abs(xi) == 0.0 && K > 1)
        throw NonNormalizable("tcs_to_ktcs: members with j > 0 are not normalizable at xi = 0");

    KtcsParams base;
    base.xi_mod = std::abs(xi);
    base.xi_arg = std::arg(xi);
    base.p = p;
    base.q = q;
    base.K = 1;
    base.j = 0;
    const double n_tcs = normalization_constant(base, base.z());

    std::vector<std::pair<complexd, KtcsParams>> out;
    out.reserve(static_cast<size_t>(K));
    for (int j = 0; j < K; ++j) {
        KtcsParams member = base;
        member.K = K;
        member.j = j;
        const double n_kj = normalization_constant(member, member.z());
        out.emplace_back(complexd{n_tcs / n_kj, 0.0}, member);
    }
    return out;
}

double phase_identity_residual(complexd chi, int p, int q, int K, int j, int j_prime) {
    KtcsParams rhs;
    rhs.xi_mod = std::abs(chi);
    rhs.xi_arg = std::arg(chi);
    rhs.p = p;
    rhs.q = q;
    rhs.K = K;
    rhs.j = j_prime;

    KtcsParams lhs = rhs;
    const complexd rotated = chi * unit_phase(-two_pi * j / K);
    lhs.xi_mod = std::abs(rotated);
    lhs.xi_arg = std::arg(rotated);

    const int n_max = std::max(auto_n_max(lhs), auto_n_max(rhs));
    const TrioState a = build_ktcs(lhs, n_max);
    const TrioState b = build_ktcs(rhs, n_max);
    const complexd factor = unit_phase(-two_pi * j * j_prime / K);

    double worst = 0.0;
    for (size_t n = 0; n < a.amplitudes.size(); ++n)
        worst = std::max(worst, std::abs(a.amplitudes[n] - factor * b.amplitudes[n]));
    return worst;
}

std::vector<std::vector<complexd>> cross_dimension(const KtcsParams& params, int K_prime) {
    params.validate();
    if (K_prime < 1) throw ValidationError("cross_dimension: K' must be >= 1");
    const int K = params.K, j = params.j;
    const double z = params.z();
    const double n_kj = normalization_constant(params, z);

    std::vector<std::vector<complexd>> coef(
        static_cast<size_t>(K_prime), std::vector<complexd>(static_cast<size_t>(K)));
    for (int jp = 0; jp < K_prime; ++jp) {
        KtcsParams member = params;
        member.K = K_prime;
        member.j = jp;
        const double n_member = normalization_constant(member, z);
        for (int jpp = 0; jpp < K; ++jpp) {
            coef[static_cast<size_t>(jp)][static_cast<size_t>(jpp)] =
                (n_kj / (K * n_member)) * unit_phase(-two_pi * j * jpp / K);
        }
    }
    return coef;
}

TrioState reconstruct_cross_dimension(const KtcsParams& params, int K_prime, int n_max) {
    const auto coef = cross_dimension(params, K_prime);
    if (n_max < 0) {
        n_max = auto_n_max(params);
        for (int jp = 0; jp < K_prime; ++jp) {
            KtcsParams member = params;
            member.K = K_prime;
            member.j = jp;
            n_max = std::max(n_max, auto_n_max(member));
        }
    }

    TrioState out;
    out.K = params.K;
    out.j = params.j;
    out.p = params.p;
    out.q = params.q;
    out.xi = params.xi();
    out.n_max = n_max;
    out.amplitudes.assign(static_cast<size_t>(n_max) + 1, complexd{0.0, 0.0});

    for (int jp = 0; jp < K_prime; ++jp) {
        for (int jpp = 0; jpp < params.K; ++jpp) {
            KtcsParams member = params;
            member.K = K_prime;
            member.j = jp;
            const complexd xi_rot = params.xi() * unit_phase(two_pi * jpp / params.K);
            member.xi_mod = std::abs(xi_rot);
            member.xi_arg = std::arg(xi_rot);
            const TrioState term = build_ktcs(member, n_max);
            const complexd c = coef[static_cast<size_t>(jp)][static_cast<size_t>(jpp)];
            for (size_t n = 0; n < term.amplitudes.size(); ++n)
                out.amplitudes[n] += c * term.amplitudes[n];
        }
    }
    return out;
}

namespace {

struct AngularQuadrature {
    // trapezoid means D(k) = (1/n) sum_t exp(2 pi i k t / n), k in [-span, span]
    int span;
    int nodes;
    std::vector<complexd> values;

    AngularQuadrature(int n, int span_) : span(span_), nodes(n), values(2 * span_ + 1) {
        for (int k = -span; k <= span; ++k) {
            complexd acc{0.0, 0.0};
            for (int t = 0; t < n; ++t) acc += unit_phase(two_pi * k * t / n);
            values[static_cast<size_t>(k + span)] = acc / static_cast<double>(n);
        }
    }
    complexd operator()(int k) const { return values[static_cast<size_t>(k + span)]; }
};

struct CoherentSetup {
    double n_kj;
    double exp_plus;   // e^{+(|a|^2+|b|^2+|g|^2)/2}
    double exp_minus;  // e^{-(|a|^2+|b|^2+|g|^2)/2}, carried by each coherent ket
    std::vector<complexd> pref;                  // e^{-2 pi i j j'/K} / (a_j'^q b_j'^p)
    std::vector<complexd> alpha, beta, gamma;    // rotated amplitudes per j'
};

CoherentSetup coherent_setup(const KtcsParams& params, complexd alpha, complexd beta,
                             complexd gamma) {
    params.validate();
    const complexd product = alpha * beta * gamma;
    if (std::abs(product - params.xi()) > 1e-12)
        throw ConstraintViolated("coherent integral: alpha*beta*gamma must equal xi");
    if (std::abs(alpha) == 0.0 || std::abs(beta) == 0.0 || std::abs(gamma) == 0.0)
        throw ConstraintViolated("coherent integral: zero amplitudes are degenerate");

    const int K = params.K, j = params.j;
    CoherentSetup s;
    s.n_kj = normalization_constant(params, params.z());
    const double e2 = std::norm(alpha) + std::norm(beta) + std::norm(gamma);
    s.exp_plus = std::exp(0.5 * e2);
    s.exp_minus = std::exp(-0.5 * e2);
    s.pref.resize(static_cast<size_t>(K));
    s.alpha.resize(static_cast<size_t>(K));
    s.beta.resize(static_cast<size_t>(K));
    s.gamma.resize(static_cast<size_t>(K));
    for (int jp = 0; jp < K; ++jp) {
        // split the ring phase evenly over the three modes so the product
        // picks up exp(2 pi i j'/K)
        const complexd w = unit_phase(two_pi * jp / (3.0 * K));
        s.alpha[static_cast<size_t>(jp)] = alpha * w;
        s.beta[static_cast<size_t>(jp)] = beta * w;
        s.gamma[static_cast<size_t>(jp)] = gamma * w;
        s.pref[static_cast<size_t>(jp)] =
            unit_phase(-two_pi * j * jp / K) /
            (std::pow(s.alpha[static_cast<size_t>(jp)], params.q) *
             std::pow(s.beta[static_cast<size_t>(jp)], params.p));
    }
    return s;
}

}  // namespace

TrioState coherent_integral_reconstruct(const KtcsParams& params, complexd alpha,
                                        complexd beta, complexd gamma, int quadrature_n,
                                        int n_max) {
    if (quadrature_n < 1)
        throw ValidationError("coherent_integral_reconstruct: quadrature_n must be >= 1");
    const CoherentSetup s = coherent_setup(params, alpha, beta, gamma);
    if (n_max < 0) n_max = auto_n_max(params);

    const AngularQuadrature D(quadrature_n, 0);  // chain components hit k = 0 only
    const complexd d0 = D(0);

    TrioState out;
    out.K = params.K;
    out.j = params.j;
    out.p = params.p;
    out.q = params.q;
    out.xi = params.xi();
    out.n_max = n_max;
    out.amplitudes.assign(static_cast<size_t>(n_max) + 1, complexd{0.0, 0.0});

    for (int jp = 0; jp < params.K; ++jp) {
        const auto fa = coherent_ladder(s.alpha[static_cast<size_t>(jp)], n_max + params.q);
        const auto fb = coherent_ladder(s.beta[static_cast<size_t>(jp)], n_max + params.p);
        const auto fc = coherent_ladder(s.gamma[static_cast<size_t>(jp)], n_max);
        const complexd c0 = (s.n_kj / params.K) * s.exp_plus * s.pref[static_cast<size_t>(jp)] *
                            s.exp_minus * d0 * d0;
        for (int n = 0; n <= n_max; ++n) {
            out.amplitudes[static_cast<size_t>(n)] +=
                c0 * fa[static_cast<size_t>(n + params.q)] *
                fb[static_cast<size_t>(n + params.p)] * fc[static_cast<size_t>(n)];
        }
    }
    return out;
}

double coherent_integral_offchain(const KtcsParams& params, complexd alpha, complexd beta,
                                  complexd gamma, int quadrature_n, int n_max) {
    if (quadrature_n < 1)
        throw ValidationError("coherent_integral_offchain: quadrature_n must be >= 1");
    const CoherentSetup s = coherent_setup(params, alpha, beta, gamma);
    if (n_max < 0) n_max = auto_n_max(params);

    const int cap_a = n_max + params.q;
    const int cap_b = n_max + params.p;
    const int cap_c = n_max;
    const int span = std::max(cap_a, std::max(cap_b, cap_c));
    const AngularQuadrature D(quadrature_n, span);

    std::vector<std::vector<complexd>> fa, fb, fc;
    for (int jp = 0; jp < params.K; ++jp) {
        fa.push_back(coherent_ladder(s.alpha[static_cast<size_t>(jp)], cap_a));
        fb.push_back(coherent_ladder(s.beta[static_cast<size_t>(jp)], cap_b));
        fc.push_back(coherent_ladder(s.gamma[static_cast<size_t>(jp)], cap_c));
    }

    double worst = 0.0;
    for (int na = 0; na <= cap_a; ++na) {
        for (int nb = 0; nb <= cap_b; ++nb) {
            for (int nc = 0; nc <= cap_c; ++nc) {
                const bool on_chain = (na - nc == params.q) && (nb - nc == params.p);
                if (on_chain) continue;
                complexd amp{0.0, 0.0};
                const complexd da = D(na - params.q - nc);
                const complexd db = D(nb - params.p - nc);
                if (std::abs(da) < 1e-300 && std::abs(db) < 1e-300) continue;
                for (int jp = 0; jp < params.K; ++jp) {
                    amp += s.pref[static_cast<size_t>(jp)] *
                           fa[static_cast<size_t>(jp)][static_cast<size_t>(na)] *
                           fb[static_cast<size_t>(jp)][static_cast<size_t>(nb)] *
                           fc[static_cast<size_t>(jp)][static_cast<size_t>(nc)] * da * db;
                }
                amp *= (s.n_kj / params.K) * s.exp_plus * s.exp_minus;
                worst = std::max(worst, std::abs(amp));
            }
        }
    }
    return worst;
}

}  // namespace ktcs
