#include <doctest.h>

#include <cmath>

#include "ktcs/iontrap.hpp"
#include "ktcs/rng.hpp"
#include "ktcs/statistics.hpp"

using ktcs::complexd;
using ktcs::KtcsParams;
namespace ion = ktcs::iontrap;

namespace {

// tiny independent dense three-mode applier for the identity spot checks
struct Dense {
    int d;
    explicit Dense(int n_top) : d(n_top + 1) {}
    size_t idx(int a, int b, int c) const {
        return (static_cast<size_t>(a) * d + b) * d + c;
    }
    std::vector<complexd> lower(const std::vector<complexd>& v, double ca, double cb,
                                double cc) const {
        std::vector<complexd> out(v.size(), complexd{0, 0});
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                for (int c = 0; c < d; ++c) {
                    const complexd x = v[idx(a, b, c)];
                    if (x == complexd{0, 0}) continue;
                    if (ca != 0 && a > 0) out[idx(a - 1, b, c)] += ca * std::sqrt(double(a)) * x;
                    if (cb != 0 && b > 0) out[idx(a, b - 1, c)] += cb * std::sqrt(double(b)) * x;
                    if (cc != 0 && c > 0) out[idx(a, b, c - 1)] += cc * std::sqrt(double(c)) * x;
                }
        return out;
    }
    std::vector<complexd> identity_lhs(const std::vector<complexd>& v) const {
        const double dir[13][4] = {{1, 1, 1, 1},   {1, -1, 1, 1},  {1, 1, -1, 1},
                                   {1, -1, -1, 1}, {1, 1, 0, -2},  {1, -1, 0, -2},
                                   {1, 0, 1, -2},  {1, 0, -1, -2}, {0, 1, 1, -2},
                                   {0, 1, -1, -2}, {1, 0, 0, 4},   {0, 1, 0, 4},
                                   {0, 0, 1, 4}};
        std::vector<complexd> acc(v.size(), complexd{0, 0});
        for (const auto& w : dir) {
            std::vector<complexd> cur = v;
            for (int k = 0; k < 6; ++k) cur = lower(cur, w[0], w[1], w[2]);
            for (size_t i = 0; i < acc.size(); ++i) acc[i] += w[3] * cur[i];
        }
        return acc;
    }
};

ion::SimConfig quick_cfg() {
    ion::SimConfig cfg;
    cfg.xi = {3.0, 0.0};
    cfg.zeta = {0.02, 0.0};
    cfg.t_max = 30.0;
    cfg.checkpoints = {10.0, 20.0, 30.0};
    return cfg;
}

}  // namespace

TEST_SUITE("iontrap") {

TEST_CASE("laser couplings: direct substitution and the product identity") {
    ion::LaserConfig lc;
    lc.omega = 1.0;
    lc.omega14 = 5e-7;
    lc.eta = 0.1;
    lc.phi = 0.0;
    const auto c = ion::xi_from_lasers(lc);
    CHECK(std::abs(c.zeta - complexd{5e-7, 0.0}) < 1e-20);
    CHECK(std::abs(c.xi_squared - complexd{1.0, 0.0}) < 1e-12);
    CHECK(lc.lamb_dicke_ok());

    // |zeta xi^2| = omega14 for any inputs
    lc.omega = 3.7;
    lc.omega14 = 0.42;
    lc.eta = 0.21;
    lc.phi = 1.3;
    const auto c2 = ion::xi_from_lasers(lc);
    CHECK(std::abs(c2.zeta * c2.xi_squared) == doctest::Approx(0.42).epsilon(1e-12));

    lc.phi = M_PI / 2;
    const auto c3 = ion::xi_from_lasers(lc);
    CHECK(std::arg(c3.xi_squared) == doctest::Approx(M_PI / 2).epsilon(1e-12));
    CHECK(std::arg(c3.zeta) == doctest::Approx(-M_PI / 2).epsilon(1e-12));
}

TEST_CASE("laser identity on specific kets") {
    {
        // |1,1,1>: six annihilations of single quanta kill both sides
        Dense sp(2);
        std::vector<complexd> v(sp.d * sp.d * sp.d, complexd{0, 0});
        v[sp.idx(1, 1, 1)] = 1.0;
        const auto lhs = sp.identity_lhs(v);
        for (const auto& x : lhs) CHECK(std::abs(x) < 1e-12);
    }
    {
        // |2,2,2>: both sides reduce to 360 * (sqrt 2)^3 |0,0,0>
        Dense sp(3);
        std::vector<complexd> v(static_cast<size_t>(sp.d) * sp.d * sp.d, complexd{0, 0});
        v[sp.idx(2, 2, 2)] = 1.0;
        const auto lhs = sp.identity_lhs(v);
        const double expected = 360.0 * 2.0 * std::sqrt(2.0);
        CHECK(std::abs(lhs[sp.idx(0, 0, 0)] - complexd{expected, 0.0}) < 1e-9);
        for (size_t i = 0; i < lhs.size(); ++i) {
            if (i != sp.idx(0, 0, 0)) CHECK(std::abs(lhs[i]) < 1e-9);
        }
    }
}

TEST_CASE("laser identity on random vectors") {
    CHECK(ion::verify_laser_identity(6, 20) < 1e-9);
    CHECK(ion::verify_laser_identity(4, 5, 123) < 1e-9);
}

TEST_CASE("chain lowering element") {
    CHECK(ion::chain_lowering_element(1, 0, 0, 0) == doctest::Approx(std::sqrt(8.0)));
    // against the generic weight: rho(4)/rho(2) at p=1,q=0
    const double expected =
        std::exp(0.5 * (ktcs::log_rho(4, 1, 0) - ktcs::log_rho(2, 1, 0)));
    CHECK(ion::chain_lowering_element(2, 0, 1, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("dark state: the built Hamiltonian annihilates |g> (x) target") {
    auto cfg = quick_cfg();
    cfg.xi = {8.0, 0.0};
    cfg.zeta = {0.02, 0.0};
    CHECK(ion::dark_state_residual(cfg) < 1e-8);
    cfg.w = 1.0;  // odd sector
    CHECK(ion::dark_state_residual(cfg) < 1e-8);
}

TEST_CASE("config validation") {
    auto cfg = quick_cfg();
    cfg.w = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ktcs::ValidationError);
    cfg = quick_cfg();
    cfg.p = -1;
    CHECK_THROWS_AS(cfg.validate(), ktcs::ValidationError);
    cfg = quick_cfg();
    cfg.m_max = 4;
    cfg.l = 9;  // beyond the truncation
    CHECK_THROWS_AS(ion::evolve_density(cfg), ktcs::ValidationError);
    cfg = quick_cfg();
    cfg.dt = 1.0;  // violates dt * (gamma + spectral radius) < 0.05
    CHECK_THROWS_AS(ion::evolve_density(cfg), ktcs::ValidationError);
}

TEST_CASE("density oracle: pure decay at zeta = 0") {
    ion::SimConfig cfg;
    cfg.xi = {2.0, 0.0};
    cfg.zeta = {0.0, 0.0};
    cfg.l = 1;
    cfg.t_max = 5.0;
    cfg.checkpoints = {1.0, 3.0, 5.0};
    const auto run = ion::evolve_density(cfg);
    // excited population = Pi at the initial chain element times e^{-t}
    for (const auto& cp : run.checkpoints) {
        // all population stays at n = 2l (sigma_- keeps m), so read the
        // excited share from the fidelity-free observable: trace is 1 and
        // the phonon distribution stays a delta
        CHECK(cp.Pi[2] == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(run.max_trace_drift < 1e-10);

    // direct excited-state population from the final density
    const auto& rho = run.final_state;
    const int D = rho.dim();
    double pe = 0.0;
    for (int i = D / 2; i < D; ++i) pe += rho.rho[static_cast<size_t>(i) * D + i].real();
    CHECK(pe == doctest::Approx(std::exp(-5.0)).epsilon(1e-6));
}

TEST_CASE("density oracle: hermiticity, trace, positivity probes") {
    auto cfg = quick_cfg();
    const auto run = ion::evolve_density(cfg);
    CHECK(run.max_trace_drift < 1e-9);
    CHECK(run.final_state.trace() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(run.final_state.hermiticity_error() < 1e-12);
    // necessary positivity probes: nonnegative diagonal and <v|rho|v> >= 0
    const int D = run.final_state.dim();
    for (int i = 0; i < D; ++i)
        CHECK(run.final_state.rho[static_cast<size_t>(i) * D + i].real() > -1e-9);
    ktcs::Xoshiro256 rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<complexd> v(static_cast<size_t>(D));
        for (auto& x : v) x = complexd{rng.uniform() - 0.5, rng.uniform() - 0.5};
        complexd quad{0, 0};
        for (int r = 0; r < D; ++r)
            for (int c = 0; c < D; ++c)
                quad += std::conj(v[static_cast<size_t>(r)]) *
                        run.final_state.rho[static_cast<size_t>(r) * D + c] *
                        v[static_cast<size_t>(c)];
        CHECK(quad.real() > -1e-9);
        CHECK(std::abs(quad.imag()) < 1e-9);
    }
}

TEST_CASE("density oracle: fidelity rises toward the dark state") {
    auto cfg = quick_cfg();
    cfg.t_max = 60.0;
    cfg.checkpoints = {1.0, 20.0, 40.0, 60.0};
    const auto run = ion::evolve_density(cfg);
    CHECK(run.checkpoints.back().F0 > run.checkpoints.front().F0);
    CHECK(run.checkpoints.back().F0 > 0.3);
}

TEST_CASE("parity populations are conserved (no sector mixing)") {
    auto cfg = quick_cfg();
    cfg.w = 0.5;
    cfg.t_max = 20.0;
    cfg.checkpoints = {0.0, 5.0, 10.0, 20.0};
    const auto run = ion::evolve_density(cfg);
    for (const auto& cp : run.checkpoints) {
        double even = 0.0, odd = 0.0;
        for (size_t n = 0; n < cp.Pi.size(); ++n) ((n % 2) ? odd : even) += cp.Pi[n];
        CHECK(even == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(odd == doctest::Approx(0.5).epsilon(1e-9));
    }
}

TEST_CASE("charge bookkeeping on the chain") {
    // <n_x> - <n_z> = q and <n_y> - <n_z> = p at every checkpoint, exact in
    // the chain representation
    auto cfg = quick_cfg();
    cfg.p = 2;
    cfg.q = 1;
    const auto run = ion::evolve_density(cfg);
    for (const auto& cp : run.checkpoints) {
        double total = 0.0, nz = 0.0;
        for (size_t n = 0; n < cp.Pi.size(); ++n) {
            total += cp.Pi[n];
            nz += static_cast<double>(n) * cp.Pi[n];
        }
        const double nx = nz + cfg.q * total;
        const double ny = nz + cfg.p * total;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(nx - nz == doctest::Approx(cfg.q).epsilon(1e-9));
        CHECK(ny - nz == doctest::Approx(cfg.p).epsilon(1e-9));
    }
}

TEST_CASE("initial state weights: Pi_{2l} = 1-w, Pi_{2l+1} = w") {
    auto cfg = quick_cfg();
    cfg.l = 3;
    cfg.w = 0.25;
    cfg.t_max = 1.0;
    cfg.checkpoints = {0.0};
    const auto run = ion::evolve_density(cfg);
    const auto& pi = run.checkpoints.front().Pi;
    CHECK(pi[6] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(pi[7] == doctest::Approx(0.25).epsilon(1e-12));
    double total = 0.0;
    for (double v : pi) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("phonon_distribution and fidelity on a hand-built density") {
    // pure |g> (x) target in the even sector
    KtcsParams target;
    target.xi_mod = 3.0;
    target.K = 2;
    target.j = 0;
    const int m_size = 10;
    const auto chain = ion::target_chain(target, m_size);

    ion::ChainDensity rho;
    rho.m_size = m_size;
    rho.sectors = {0};
    const int D = rho.dim();
    rho.rho.assign(static_cast<size_t>(D) * D, complexd{0, 0});
    for (int m = 0; m < m_size; ++m)
        for (int mp = 0; mp < m_size; ++mp)
            rho.rho[static_cast<size_t>(m) * D + mp] =
                chain[static_cast<size_t>(m)] * std::conj(chain[static_cast<size_t>(mp)]);

    CHECK(ion::fidelity(rho, target) == doctest::Approx(1.0).epsilon(1e-10));
    double total = 0.0;
    for (int n = 0; n < 2 * m_size; ++n) total += ion::phonon_distribution(rho, n);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(ion::phonon_distribution(rho, 1) == 0.0);  // odd sector absent
}

TEST_CASE("mcwf: pure decay statistics match the analytic law") {
    ion::SimConfig cfg;
    cfg.xi = {2.0, 0.0};
    cfg.zeta = {0.0, 0.0};
    cfg.l = 0;
    cfg.t_max = 3.0;
    cfg.n_traj = 1000;
    cfg.seed = 2024;
    cfg.checkpoints = {0.5, 1.5, 3.0};
    const auto run = ion::mcwf_run(cfg);
    // with zeta = 0 the target fidelity F0 equals the ground population
    // times |<target|0>|^2; use the phonon trace instead: population stays
    // at n = 0, so compare survival of the excited state via jumps
    // recorded implicitly in F0' ... simplest: the excited population is
    // 1 - (fraction of jumped trajectories), binomial with p = 1 - e^{-t}
    (void)run;
    // explicit check below via a fresh run measuring Pi and F with a target
    ion::SimConfig c2 = cfg;
    c2.xi = {1.0, 0.0};
    const auto r2 = ion::mcwf_run(c2);
    for (const auto& cp : r2.checkpoints) {
        // F0 = P(ground) * |<target|vacuum chain>|^2; with xi = 1, K = 2 the
        // vacuum amplitude of the target is |c_0|^2
        KtcsParams t;
        t.xi_mod = 1.0;
        t.K = 2;
        t.j = 0;
        const auto chain = ion::target_chain(t, 4);
        const double c0 = std::norm(chain[0]);
        const double p_ground = 1.0 - std::exp(-cp.gamma_t);
        const double expect = p_ground * c0;
        const double sigma = std::max(cp.F0_err, 1e-6);
        CHECK(std::abs(cp.F0 - expect) < 3.0 * sigma + 1e-9);
    }
    CHECK(run.max_jump_prob <= 0.01 + 1e-12);
}

TEST_CASE("mcwf: deterministic under a fixed seed, sensitive to the seed") {
    auto cfg = quick_cfg();
    cfg.n_traj = 25;
    cfg.seed = 77;
    const auto a = ion::mcwf_run(cfg);
    const auto b = ion::mcwf_run(cfg);
    for (size_t i = 0; i < a.checkpoints.size(); ++i) {
        CHECK(a.checkpoints[i].F0 == b.checkpoints[i].F0);
        for (size_t n = 0; n < a.checkpoints[i].Pi.size(); ++n)
            CHECK(a.checkpoints[i].Pi[n] == b.checkpoints[i].Pi[n]);
    }
    cfg.seed = 78;
    const auto c = ion::mcwf_run(cfg);
    CHECK(c.checkpoints.back().F0 != a.checkpoints.back().F0);
}

TEST_CASE("mcwf: oversized steps are rejected at runtime") {
    auto cfg = quick_cfg();
    cfg.dt = 0.2;  // jump probability 0.2 > 0.1 from the excited start
    CHECK_THROWS_AS(ion::mcwf_run(cfg), ktcs::StepTooLarge);
}

TEST_CASE("mcwf agrees with the density oracle") {
    auto cfg = quick_cfg();
    cfg.t_max = 30.0;
    cfg.checkpoints = {5.0, 10.0, 20.0, 30.0};
    const auto oracle = ion::evolve_density(cfg);
    auto mc_cfg = cfg;
    mc_cfg.n_traj = 300;
    mc_cfg.seed = 5150;
    const auto mc = ion::mcwf_run(mc_cfg);
    REQUIRE(oracle.checkpoints.size() == mc.checkpoints.size());
    for (size_t i = 0; i < mc.checkpoints.size(); ++i) {
        const auto& m = mc.checkpoints[i];
        const auto& o = oracle.checkpoints[i];
        CHECK(std::abs(m.F0 - o.F0) < 3.0 * std::max(m.F0_err, 1e-4));
        for (size_t n = 0; n < m.Pi.size() && n < o.Pi.size(); ++n)
            CHECK(std::abs(m.Pi[n] - o.Pi[n]) < 3.0 * std::max(m.Pi_err[n], 1e-4));
    }
}

TEST_CASE("mcwf wrong-parity occupation is exactly zero") {
    auto cfg = quick_cfg();
    cfg.n_traj = 50;
    cfg.w = 0.0;
    const auto run = ion::mcwf_run(cfg);
    for (const auto& cp : run.checkpoints)
        for (size_t n = 1; n < cp.Pi.size(); n += 2) CHECK(cp.Pi[n] == 0.0);
}

}  // TEST_SUITE
