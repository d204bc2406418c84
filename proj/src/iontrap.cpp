#include "ktcs/iontrap.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ktcs/rng.hpp"

namespace ktcs::iontrap {

Couplings xi_from_lasers(const LaserConfig& cfg) {
    if (!(cfg.omega > 0.0) || !(cfg.omega14 > 0.0))
        throw ValidationError("xi_from_lasers: omega and omega14 must be positive");
    const double eta6 = std::pow(cfg.eta, 6);
    Couplings out;
    out.zeta = 0.5 * cfg.omega * eta6 * std::polar(1.0, -cfg.phi);
    out.xi_squared = (2.0 * cfg.omega14 / (cfg.omega * eta6)) * std::polar(1.0, cfg.phi);
    return out;
}

// ---------------------------------------------------------------------------
// dense three-mode identity check
// ---------------------------------------------------------------------------

namespace {

struct DenseThreeMode {
    int n_top;  // per-mode occupation 0..n_top
    int dim1;   // n_top+1

    explicit DenseThreeMode(int n) : n_top(n), dim1(n + 1) {}
    size_t size() const { return static_cast<size_t>(dim1) * dim1 * dim1; }
    size_t idx(int na, int nb, int nc) const {
        return (static_cast<size_t>(na) * dim1 + nb) * dim1 + nc;
    }

    // psi' = (ca a + cb b + cc c) psi
    std::vector<complexd> lower(const std::vector<complexd>& psi, double ca, double cb,
                                double cc) const {
        std::vector<complexd> out(size(), complexd{0.0, 0.0});
        for (int na = 0; na <= n_top; ++na)
            for (int nb = 0; nb <= n_top; ++nb)
                for (int nc = 0; nc <= n_top; ++nc) {
                    const complexd v = psi[idx(na, nb, nc)];
                    if (v == complexd{0.0, 0.0}) continue;
                    if (ca != 0.0 && na > 0)
                        out[idx(na - 1, nb, nc)] += ca * std::sqrt(double(na)) * v;
                    if (cb != 0.0 && nb > 0)
                        out[idx(na, nb - 1, nc)] += cb * std::sqrt(double(nb)) * v;
                    if (cc != 0.0 && nc > 0)
                        out[idx(na, nb, nc - 1)] += cc * std::sqrt(double(nc)) * v;
                }
        return out;
    }
};

double vec_norm(const std::vector<complexd>& v) {
    double acc = 0.0;
    for (const auto& x : v) acc += std::norm(x);
    return std::sqrt(acc);
}

}  // namespace

double verify_laser_identity(int n_max, int trials, std::uint64_t seed) {
    if (n_max < 2 || n_max > 8)
        throw ValidationError("verify_laser_identity: n_max must be in [2, 8]");
    if (trials < 1) throw ValidationError("verify_laser_identity: trials must be >= 1");

    const DenseThreeMode space(n_max);
    // the thirteen sideband laser directions as (ca, cb, cc) coefficients
    struct Op {
        double ca, cb, cc, weight;
    };
    const Op ops[13] = {
        {1, 1, 1, 1.0},  {1, -1, 1, 1.0},  {1, 1, -1, 1.0}, {1, -1, -1, 1.0},
        {1, 1, 0, -2.0}, {1, -1, 0, -2.0}, {1, 0, 1, -2.0}, {1, 0, -1, -2.0},
        {0, 1, 1, -2.0}, {0, 1, -1, -2.0}, {1, 0, 0, 4.0},  {0, 1, 0, 4.0},
        {0, 0, 1, 4.0}};

    // scale of 360 (abc)^2 on this truncation
    const double g_top = std::pow(double(n_max) * (n_max - 1), 1.5);
    const double scale = 360.0 * std::max(g_top, 1.0);

    Xoshiro256 rng(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::vector<complexd> psi(space.size());
        for (auto& x : psi) {
            // Box-Muller pairs for complex gaussian entries
            const double u1 = std::max(rng.uniform(), 1e-300);
            const double u2 = rng.uniform();
            const double r = std::sqrt(-2.0 * std::log(u1));
            x = complexd{r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
        }
        const double nrm = vec_norm(psi);
        for (auto& x : psi) x /= nrm;

        std::vector<complexd> lhs(space.size(), complexd{0.0, 0.0});
        for (const Op& op : ops) {
            std::vector<complexd> cur = psi;
            for (int k = 0; k < 6; ++k) cur = space.lower(cur, op.ca, op.cb, op.cc);
            for (size_t i = 0; i < lhs.size(); ++i) lhs[i] += op.weight * cur[i];
        }

        std::vector<complexd> rhs = psi;
        rhs = space.lower(rhs, 1, 0, 0);
        rhs = space.lower(rhs, 1, 0, 0);
        rhs = space.lower(rhs, 0, 1, 0);
        rhs = space.lower(rhs, 0, 1, 0);
        rhs = space.lower(rhs, 0, 0, 1);
        rhs = space.lower(rhs, 0, 0, 1);
        for (auto& x : rhs) x *= 360.0;

        double diff = 0.0;
        for (size_t i = 0; i < lhs.size(); ++i) diff += std::norm(lhs[i] - rhs[i]);
        worst = std::max(worst, std::sqrt(diff) / scale);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// chain-reduced model
// ---------------------------------------------------------------------------

void SimConfig::validate() const {
    if (!(gamma > 0.0)) throw ValidationError("SimConfig: gamma must be positive");
    if (p < 0 || q < 0) throw ValidationError("SimConfig: charges must be non-negative");
    if (w < 0.0 || w > 1.0) throw ValidationError("SimConfig: w must lie in [0, 1]");
    if (l < 0) throw ValidationError("SimConfig: l must be non-negative");
    if (!(t_max > 0.0)) throw ValidationError("SimConfig: t_max must be positive");
    if (n_traj < 1) throw ValidationError("SimConfig: n_traj must be >= 1");
    if (!std::isfinite(std::abs(xi)) || !std::isfinite(std::abs(zeta)))
        throw ValidationError("SimConfig: xi and zeta must be finite");
}

namespace {

struct Model {
    int M = 0;    // chain levels per sector
    int n_par = 0;
    std::vector<int> sectors;  // parity values of the slots
    int Dm = 0;   // n_par * M
    int D = 0;    // 2 * Dm
    complexd zeta, xi2;
    double gamma = 1.0;
    std::vector<std::vector<double>> g;        // g[slot][m]: coupling m-1 <- m, g[.][0] = 0
    std::vector<std::vector<complexd>> target; // normalized target per slot (may be empty)
    double g_max = 0.0;

    size_t at(int s, int slot, int m) const {
        return static_cast<size_t>(s) * Dm + static_cast<size_t>(slot) * M + m;
    }
    int slot_of(int parity) const {
        for (size_t k = 0; k < sectors.size(); ++k)
            if (sectors[k] == parity) return static_cast<int>(k);
        return -1;
    }
};

int auto_m_max(const SimConfig& cfg) {
    int m_needed = cfg.l + 3;
    if (std::abs(cfg.xi) > 0.0) {
        for (int jp = 0; jp <= 1; ++jp) {
            KtcsParams t;
            t.xi_mod = std::abs(cfg.xi);
            t.xi_arg = std::arg(cfg.xi);
            t.p = cfg.p;
            t.q = cfg.q;
            t.K = 2;
            t.j = jp;
            const TrioState state = build_ktcs(t);
            double cum = 0.0;
            int m_tail = 0;
            for (int m = 0; 2 * m + jp <= state.n_max; ++m) {
                cum += std::norm(state.amplitudes[static_cast<size_t>(2 * m + jp)]);
                if (1.0 - cum < 1e-12) {
                    m_tail = m;
                    break;
                }
                m_tail = m;
            }
            m_needed = std::max(m_needed, m_tail + 5);
        }
    }
    return m_needed;
}

Model build_model(const SimConfig& cfg) {
    cfg.validate();
    Model mod;
    mod.M = (cfg.m_max >= 0) ? cfg.m_max + 1 : auto_m_max(cfg) + 1;
    if (cfg.l >= mod.M)
        throw ValidationError("SimConfig: initial index l exceeds the chain truncation");
    if (cfg.w == 0.0)
        mod.sectors = {0};
    else if (cfg.w == 1.0)
        mod.sectors = {1};
    else
        mod.sectors = {0, 1};
    mod.n_par = static_cast<int>(mod.sectors.size());
    mod.Dm = mod.n_par * mod.M;
    mod.D = 2 * mod.Dm;
    mod.zeta = cfg.zeta;
    mod.xi2 = cfg.xi * cfg.xi;
    mod.gamma = cfg.gamma;

    for (int slot = 0; slot < mod.n_par; ++slot) {
        const int jp = mod.sectors[static_cast<size_t>(slot)];
        std::vector<double> gs(static_cast<size_t>(mod.M), 0.0);
        for (int m = 1; m < mod.M; ++m) {
            const double n = 2.0 * m + jp;
            gs[static_cast<size_t>(m)] = std::sqrt((n + cfg.p) * (n + cfg.p - 1.0) *
                                                   (n + cfg.q) * (n + cfg.q - 1.0) * n *
                                                   (n - 1.0));
            mod.g_max = std::max(mod.g_max, gs[static_cast<size_t>(m)]);
        }
        mod.g.push_back(std::move(gs));

        if (std::abs(cfg.xi) > 0.0) {
            KtcsParams t;
            t.xi_mod = std::abs(cfg.xi);
            t.xi_arg = std::arg(cfg.xi);
            t.p = cfg.p;
            t.q = cfg.q;
            t.K = 2;
            t.j = jp;
            mod.target.push_back(target_chain(t, mod.M));
        } else {
            mod.target.push_back({});
        }
    }
    return mod;
}

double spectral_radius_bound(const Model& mod) {
    return std::abs(mod.zeta) * (std::abs(mod.xi2) + mod.g_max);
}

// initial pure state |e> ( sqrt(1-w)|Psi_{l,0}> + sqrt(w)|Psi_{l,1}> ),
// restricted to the sectors the model carries
std::vector<complexd> initial_state(const Model& mod, const SimConfig& cfg) {
    std::vector<complexd> psi(static_cast<size_t>(mod.D), complexd{0.0, 0.0});
    const int slot0 = mod.slot_of(0);
    const int slot1 = mod.slot_of(1);
    if (slot0 >= 0 && cfg.w < 1.0)
        psi[mod.at(1, slot0, cfg.l)] = std::sqrt(1.0 - cfg.w);
    if (slot1 >= 0 && cfg.w > 0.0)
        psi[mod.at(1, slot1, cfg.l)] = std::sqrt(cfg.w);
    return psi;
}

std::vector<double> checkpoint_times(const SimConfig& cfg) {
    if (!cfg.checkpoints.empty()) {
        auto t = cfg.checkpoints;
        std::sort(t.begin(), t.end());
        for (double v : t)
            if (!(v >= 0.0) || v > cfg.t_max + 1e-9)
                throw ValidationError("SimConfig: checkpoints must lie in [0, t_max]");
        return t;
    }
    std::vector<double> t;
    for (int i = 1; i <= 10; ++i) t.push_back(cfg.t_max * i / 10.0);
    return t;
}

// ---- density-matrix oracle ----

// The bidiagonal chain operator Z = zeta [ (abc)^2 - xi^2 ] acting inside
// one electronic block: Z[m-1, m] = zeta g_m, Z[m, m] = -zeta xi^2,
// block-diagonal over parity slots.
struct BlockOps {
    const Model* mod;
    complexd zd;  // -zeta xi^2 (diagonal entry)

    explicit BlockOps(const Model& m) : mod(&m), zd(-m.zeta * m.xi2) {}

    double g_of(int r) const {
        const int slot = r / mod->M;
        const int m = r % mod->M;
        return mod->g[static_cast<size_t>(slot)][static_cast<size_t>(m)];
    }

    // Y += c * Z X   over a Dm x Dm block (row stride = full dimension D)
    void add_zx(complexd c, const complexd* X, complexd* Y) const {
        const int Dm = mod->Dm, D = mod->D, M = mod->M;
        for (int r = 0; r < Dm; ++r) {
            const complexd* xr = X + static_cast<size_t>(r) * D;
            complexd* yr = Y + static_cast<size_t>(r) * D;
            const complexd cd = c * zd;
            if ((r % M) + 1 < M) {
                const complexd cu = c * mod->zeta * g_of(r + 1);
                const complexd* xu = X + static_cast<size_t>(r + 1) * D;
                for (int col = 0; col < Dm; ++col) yr[col] += cd * xr[col] + cu * xu[col];
            } else {
                for (int col = 0; col < Dm; ++col) yr[col] += cd * xr[col];
            }
        }
    }

    // Y += c * Z^dag X
    void add_zdx(complexd c, const complexd* X, complexd* Y) const {
        const int Dm = mod->Dm, D = mod->D, M = mod->M;
        const complexd zdc = std::conj(zd);
        for (int r = 0; r < Dm; ++r) {
            complexd* yr = Y + static_cast<size_t>(r) * D;
            const complexd* xr = X + static_cast<size_t>(r) * D;
            const complexd cd = c * zdc;
            if ((r % M) >= 1) {
                const complexd cdn = c * std::conj(mod->zeta) * g_of(r);
                const complexd* xd = X + static_cast<size_t>(r - 1) * D;
                for (int col = 0; col < Dm; ++col) yr[col] += cd * xr[col] + cdn * xd[col];
            } else {
                for (int col = 0; col < Dm; ++col) yr[col] += cd * xr[col];
            }
        }
    }

    // Y += c * X Z
    void add_xz(complexd c, const complexd* X, complexd* Y) const {
        const int Dm = mod->Dm, D = mod->D, M = mod->M;
        for (int r = 0; r < Dm; ++r) {
            const complexd* xr = X + static_cast<size_t>(r) * D;
            complexd* yr = Y + static_cast<size_t>(r) * D;
            for (int col = 0; col < Dm; ++col) {
                complexd acc = c * zd * xr[col];
                const int m = col % M;
                if (m >= 1) acc += c * mod->zeta * g_of(col) * xr[col - 1];
                yr[col] += acc;
            }
        }
    }

    // Y += c * X Z^dag
    void add_xzd(complexd c, const complexd* X, complexd* Y) const {
        const int Dm = mod->Dm, D = mod->D, M = mod->M;
        const complexd zdc = std::conj(zd);
        for (int r = 0; r < Dm; ++r) {
            const complexd* xr = X + static_cast<size_t>(r) * D;
            complexd* yr = Y + static_cast<size_t>(r) * D;
            for (int col = 0; col < Dm; ++col) {
                complexd acc = c * zdc * xr[col];
                const int m = col % M;
                if (m + 1 < M)
                    acc += c * std::conj(mod->zeta) * g_of(col + 1) * xr[col + 1];
                yr[col] += acc;
            }
        }
    }
};

// d rho/dt = -i[H, rho] + gamma ( s- rho s+ - {s+ s-, rho}/2 ) on the
// electronic 2x2 block structure of rho
void density_rhs(const Model& mod, const BlockOps& ops, const std::vector<complexd>& rho,
                 std::vector<complexd>& out) {
    const int Dm = mod.Dm, D = mod.D;
    std::fill(out.begin(), out.end(), complexd{0.0, 0.0});
    const complexd mi{0.0, -1.0};
    const double gam = mod.gamma;

    const complexd* r_gg = rho.data();
    const complexd* r_ge = rho.data() + Dm;
    const complexd* r_eg = rho.data() + static_cast<size_t>(Dm) * D;
    const complexd* r_ee = rho.data() + static_cast<size_t>(Dm) * D + Dm;
    complexd* o_gg = out.data();
    complexd* o_ge = out.data() + Dm;
    complexd* o_eg = out.data() + static_cast<size_t>(Dm) * D;
    complexd* o_ee = out.data() + static_cast<size_t>(Dm) * D + Dm;

    // gg: -i (Zd r_eg - r_ge Z) + gamma r_ee
    ops.add_zdx(mi, r_eg, o_gg);
    ops.add_xz(-mi, r_ge, o_gg);
    // ge: -i (Zd r_ee - r_gg Zd) - gamma/2 r_ge
    ops.add_zdx(mi, r_ee, o_ge);
    ops.add_xzd(-mi, r_gg, o_ge);
    // eg: -i (Z r_gg - r_ee Z) - gamma/2 r_eg
    ops.add_zx(mi, r_gg, o_eg);
    ops.add_xz(-mi, r_ee, o_eg);
    // ee: -i (Z r_ge - r_eg Zd) - gamma r_ee
    ops.add_zx(mi, r_ge, o_ee);
    ops.add_xzd(-mi, r_eg, o_ee);

    for (int r = 0; r < Dm; ++r) {
        for (int c = 0; c < Dm; ++c) {
            const size_t i_gg = static_cast<size_t>(r) * D + c;
            const size_t i_ge = static_cast<size_t>(r) * D + Dm + c;
            const size_t i_eg = (static_cast<size_t>(r) + Dm) * D + c;
            const size_t i_ee = (static_cast<size_t>(r) + Dm) * D + Dm + c;
            out[i_gg] += gam * rho[i_ee];
            out[i_ge] -= 0.5 * gam * rho[i_ge];
            out[i_eg] -= 0.5 * gam * rho[i_eg];
            out[i_ee] -= gam * rho[i_ee];
        }
    }
}

double density_trace(const Model& mod, const std::vector<complexd>& rho) {
    double tr = 0.0;
    for (int i = 0; i < mod.D; ++i)
        tr += rho[static_cast<size_t>(i) * mod.D + i].real();
    return tr;
}

Checkpoint measure_density(const Model& mod, const std::vector<complexd>& rho, double gamma_t) {
    Checkpoint cp;
    cp.gamma_t = gamma_t;
    cp.Pi.assign(static_cast<size_t>(2 * mod.M), 0.0);
    for (int slot = 0; slot < mod.n_par; ++slot) {
        const int jp = mod.sectors[static_cast<size_t>(slot)];
        for (int m = 0; m < mod.M; ++m) {
            double pop = 0.0;
            for (int s = 0; s < 2; ++s) {
                const size_t i = mod.at(s, slot, m);
                pop += rho[i * mod.D + i].real();
            }
            cp.Pi[static_cast<size_t>(2 * m + jp)] = pop;
        }
        if (!mod.target[static_cast<size_t>(slot)].empty()) {
            // F_j = <T, g| rho |T, g>
            const auto& T = mod.target[static_cast<size_t>(slot)];
            complexd acc{0.0, 0.0};
            for (int m = 0; m < mod.M; ++m) {
                for (int mp = 0; mp < mod.M; ++mp) {
                    acc += std::conj(T[static_cast<size_t>(m)]) *
                           rho[mod.at(0, slot, m) * mod.D + mod.at(0, slot, mp)] *
                           T[static_cast<size_t>(mp)];
                }
            }
            if (jp == 0)
                cp.F0 = acc.real();
            else
                cp.F1 = acc.real();
        }
    }
    return cp;
}

}  // namespace

DensityRun evolve_density(const SimConfig& cfg) {
    const Model mod = build_model(cfg);
    const BlockOps ops(mod);

    double dt = cfg.dt;
    const double bound = cfg.gamma + spectral_radius_bound(mod);
    if (dt <= 0.0) {
        dt = 0.045 / bound;
    } else if (dt * bound >= 0.05) {
        throw ValidationError("evolve_density: dt * (gamma + spectral radius) must stay below 0.05");
    }

    const auto times = checkpoint_times(cfg);
    const long long steps = static_cast<long long>(std::ceil(cfg.t_max / dt - 1e-9));
    dt = cfg.t_max / static_cast<double>(steps);  // land exactly on t_max

    const size_t sz = static_cast<size_t>(mod.D) * mod.D;
    std::vector<complexd> rho(sz, complexd{0.0, 0.0});
    {
        const auto psi = initial_state(mod, cfg);
        for (int r = 0; r < mod.D; ++r)
            for (int c = 0; c < mod.D; ++c)
                rho[static_cast<size_t>(r) * mod.D + c] =
                    psi[static_cast<size_t>(r)] * std::conj(psi[static_cast<size_t>(c)]);
    }

    std::vector<complexd> k1(sz), k2(sz), k3(sz), k4(sz), tmp(sz);
    DensityRun run;
    run.dt = dt;
    size_t next_cp = 0;

    auto record_due = [&](double t_now) {
        while (next_cp < times.size() && times[next_cp] <= t_now + 1e-12) {
            run.checkpoints.push_back(measure_density(mod, rho, times[next_cp]));
            ++next_cp;
        }
    };
    record_due(0.0);

    for (long long step = 0; step < steps; ++step) {
        density_rhs(mod, ops, rho, k1);
        for (size_t i = 0; i < sz; ++i) tmp[i] = rho[i] + 0.5 * dt * k1[i];
        density_rhs(mod, ops, tmp, k2);
        for (size_t i = 0; i < sz; ++i) tmp[i] = rho[i] + 0.5 * dt * k2[i];
        density_rhs(mod, ops, tmp, k3);
        for (size_t i = 0; i < sz; ++i) tmp[i] = rho[i] + dt * k3[i];
        density_rhs(mod, ops, tmp, k4);
        for (size_t i = 0; i < sz; ++i)
            rho[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

        const double drift = std::abs(density_trace(mod, rho) - 1.0);
        run.max_trace_drift = std::max(run.max_trace_drift, drift);
        if (drift > 1e-8)
            throw StepTooLarge("evolve_density: trace drift exceeded 1e-8");
        record_due(dt * static_cast<double>(step + 1));
    }
    record_due(cfg.t_max + 1.0);  // flush any checkpoint at exactly t_max

    density_rhs(mod, ops, rho, k1);
    double fro = 0.0;
    for (const auto& x : k1) fro += std::norm(x);
    run.final_rhs_norm = std::sqrt(fro);

    run.final_state.m_size = mod.M;
    run.final_state.sectors = mod.sectors;
    run.final_state.rho = std::move(rho);
    return run;
}

// ---------------------------------------------------------------------------
// MCWF unraveling
// ---------------------------------------------------------------------------

namespace {

// exp(A) for a dense complex matrix by scaling-and-squaring with a Taylor
// kernel; dimensions here are small (<= ~120)
std::vector<complexd> expm(const std::vector<complexd>& A, int D) {
    double norm_inf = 0.0;
    for (int r = 0; r < D; ++r) {
        double row = 0.0;
        for (int c = 0; c < D; ++c) row += std::abs(A[static_cast<size_t>(r) * D + c]);
        norm_inf = std::max(norm_inf, row);
    }
    int scale = 0;
    while (norm_inf > 0.25 && scale < 40) {
        norm_inf *= 0.5;
        ++scale;
    }
    const double factor = std::ldexp(1.0, -scale);
    const size_t sz = static_cast<size_t>(D) * D;
    std::vector<complexd> B(sz);
    for (size_t i = 0; i < sz; ++i) B[i] = A[i] * factor;

    auto matmul = [D](const std::vector<complexd>& x, const std::vector<complexd>& y) {
        std::vector<complexd> out(static_cast<size_t>(D) * D, complexd{0.0, 0.0});
        for (int r = 0; r < D; ++r)
            for (int k = 0; k < D; ++k) {
                const complexd v = x[static_cast<size_t>(r) * D + k];
                if (v == complexd{0.0, 0.0}) continue;
                const complexd* yk = y.data() + static_cast<size_t>(k) * D;
                complexd* outr = out.data() + static_cast<size_t>(r) * D;
                for (int c = 0; c < D; ++c) outr[c] += v * yk[c];
            }
        return out;
    };

    std::vector<complexd> result(sz, complexd{0.0, 0.0});
    for (int i = 0; i < D; ++i) result[static_cast<size_t>(i) * D + i] = 1.0;
    std::vector<complexd> term = result;
    for (int k = 1; k <= 30; ++k) {
        term = matmul(term, B);
        for (auto& t : term) t /= static_cast<double>(k);
        double tn = 0.0;
        for (const auto& t : term) tn += std::norm(t);
        for (size_t i = 0; i < sz; ++i) result[i] += term[i];
        if (std::sqrt(tn) < 1e-19) break;
    }
    for (int s = 0; s < scale; ++s) result = matmul(result, result);
    return result;
}

std::vector<complexd> build_h_eff(const Model& mod) {
    // H_eff = H - i (gamma/2) |e><e|, dense on the chain basis
    const int D = mod.D, M = mod.M;
    std::vector<complexd> h(static_cast<size_t>(D) * D, complexd{0.0, 0.0});
    const complexd zd = -mod.zeta * mod.xi2;
    for (int slot = 0; slot < mod.n_par; ++slot) {
        for (int m = 0; m < M; ++m) {
            const size_t ig = mod.at(0, slot, m);
            const size_t ie = mod.at(1, slot, m);
            // <e,m|H|g,m> = -zeta xi^2 ; <e,m-1|H|g,m> = zeta g_m
            h[ie * D + ig] += zd;
            h[ig * D + ie] += std::conj(zd);
            if (m >= 1) {
                const size_t ie_dn = mod.at(1, slot, m - 1);
                const complexd zg = mod.zeta * mod.g[static_cast<size_t>(slot)][static_cast<size_t>(m)];
                h[ie_dn * D + ig] += zg;
                h[ig * D + ie_dn] += std::conj(zg);
            }
            h[ie * D + ie] += complexd{0.0, -0.5 * mod.gamma};
        }
    }
    return h;
}

struct TrajectoryStats {
    // running mean/variance accumulators per checkpoint
    std::vector<double> f0_sum, f0_sq, f1_sum, f1_sq;
    std::vector<std::vector<double>> pi_sum, pi_sq;
};

}  // namespace

McwfRun mcwf_run(const SimConfig& cfg) {
    const Model mod = build_model(cfg);

    double dt = cfg.dt;
    if (dt <= 0.0) dt = 0.01 / cfg.gamma;

    const auto times = checkpoint_times(cfg);
    const long long steps = static_cast<long long>(std::ceil(cfg.t_max / dt - 1e-9));
    dt = cfg.t_max / static_cast<double>(steps);  // land exactly on t_max
    std::vector<long long> cp_step;
    for (double t : times)
        cp_step.push_back(std::min<long long>(steps, static_cast<long long>(std::ceil(t / dt - 1e-9))));

    // exact drift propagator for the no-jump branch
    std::vector<complexd> heff = build_h_eff(mod);
    for (auto& x : heff) x *= complexd{0.0, -dt};  // -i H_eff dt
    const std::vector<complexd> U = expm(heff, mod.D);

    const auto psi0 = initial_state(mod, cfg);
    const size_t n_cp = times.size();
    const size_t n_pi = static_cast<size_t>(2 * mod.M);

    TrajectoryStats st;
    st.f0_sum.assign(n_cp, 0.0);
    st.f0_sq.assign(n_cp, 0.0);
    st.f1_sum.assign(n_cp, 0.0);
    st.f1_sq.assign(n_cp, 0.0);
    st.pi_sum.assign(n_cp, std::vector<double>(n_pi, 0.0));
    st.pi_sq.assign(n_cp, std::vector<double>(n_pi, 0.0));

    double max_jump_prob = 0.0;
    std::vector<complexd> psi(static_cast<size_t>(mod.D)), tmp(static_cast<size_t>(mod.D));

    auto measure = [&](size_t cp_index) {
        // psi is kept normalized
        double f0 = 0.0, f1 = 0.0;
        std::vector<double> pi(n_pi, 0.0);
        for (int slot = 0; slot < mod.n_par; ++slot) {
            const int jp = mod.sectors[static_cast<size_t>(slot)];
            for (int m = 0; m < mod.M; ++m) {
                const double pop = std::norm(psi[mod.at(0, slot, m)]) +
                                   std::norm(psi[mod.at(1, slot, m)]);
                pi[static_cast<size_t>(2 * m + jp)] = pop;
            }
            if (!mod.target[static_cast<size_t>(slot)].empty()) {
                complexd amp{0.0, 0.0};
                const auto& T = mod.target[static_cast<size_t>(slot)];
                for (int m = 0; m < mod.M; ++m)
                    amp += std::conj(T[static_cast<size_t>(m)]) * psi[mod.at(0, slot, m)];
                const double f = std::norm(amp);
                if (jp == 0)
                    f0 = f;
                else
                    f1 = f;
            }
        }
        st.f0_sum[cp_index] += f0;
        st.f0_sq[cp_index] += f0 * f0;
        st.f1_sum[cp_index] += f1;
        st.f1_sq[cp_index] += f1 * f1;
        for (size_t i = 0; i < n_pi; ++i) {
            st.pi_sum[cp_index][i] += pi[i];
            st.pi_sq[cp_index][i] += pi[i] * pi[i];
        }
    };

    for (int traj = 0; traj < cfg.n_traj; ++traj) {
        Xoshiro256 rng(sub_seed(cfg.seed, static_cast<std::uint64_t>(traj)));
        psi = psi0;
        size_t next = 0;
        while (next < n_cp && cp_step[next] == 0) measure(next++);
        for (long long step = 0; step < steps; ++step) {
            // excited-state population drives the jump probability
            double pe = 0.0;
            for (int i = mod.Dm; i < mod.D; ++i) pe += std::norm(psi[static_cast<size_t>(i)]);
            const double p_jump = cfg.gamma * dt * pe;
            max_jump_prob = std::max(max_jump_prob, p_jump);
            if (p_jump > 0.1)
                throw StepTooLarge("mcwf_run: jump probability per step exceeded 0.1");

            if (rng.uniform() < p_jump) {
                // sigma_-: move e -> g, zero the excited part, renormalize
                for (int i = 0; i < mod.Dm; ++i) {
                    psi[static_cast<size_t>(i)] = psi[static_cast<size_t>(i + mod.Dm)];
                    psi[static_cast<size_t>(i + mod.Dm)] = complexd{0.0, 0.0};
                }
                const double nrm = vec_norm(psi);
                if (nrm > 0.0)
                    for (auto& x : psi) x /= nrm;
            } else {
                // drift under exp(-i H_eff dt), then renormalize
                std::fill(tmp.begin(), tmp.end(), complexd{0.0, 0.0});
                for (int r = 0; r < mod.D; ++r) {
                    const complexd* ur = U.data() + static_cast<size_t>(r) * mod.D;
                    complexd acc{0.0, 0.0};
                    for (int c = 0; c < mod.D; ++c) acc += ur[c] * psi[static_cast<size_t>(c)];
                    tmp[static_cast<size_t>(r)] = acc;
                }
                psi.swap(tmp);
                const double nrm = vec_norm(psi);
                for (auto& x : psi) x /= nrm;
            }
            while (next < n_cp && cp_step[next] == step + 1) measure(next++);
        }
        while (next < n_cp) measure(next++);
    }

    McwfRun run;
    run.n_traj = cfg.n_traj;
    run.dt = dt;
    run.max_jump_prob = max_jump_prob;
    const double n = static_cast<double>(cfg.n_traj);
    for (size_t i = 0; i < n_cp; ++i) {
        McwfCheckpoint cp;
        cp.gamma_t = times[i];
        auto finish = [&](double sum, double sq, double& mean, double& err) {
            mean = sum / n;
            const double var = std::max(0.0, sq / n - mean * mean);
            err = (cfg.n_traj > 1) ? std::sqrt(var / (n - 1.0)) : 0.0;
        };
        finish(st.f0_sum[i], st.f0_sq[i], cp.F0, cp.F0_err);
        finish(st.f1_sum[i], st.f1_sq[i], cp.F1, cp.F1_err);
        cp.Pi.assign(n_pi, 0.0);
        cp.Pi_err.assign(n_pi, 0.0);
        for (size_t k = 0; k < n_pi; ++k)
            finish(st.pi_sum[i][k], st.pi_sq[i][k], cp.Pi[k], cp.Pi_err[k]);
        run.checkpoints.push_back(std::move(cp));
    }
    return run;
}

// ---------------------------------------------------------------------------
// observables on densities
// ---------------------------------------------------------------------------

double ChainDensity::trace() const {
    const int D = dim();
    double tr = 0.0;
    for (int i = 0; i < D; ++i) tr += rho[static_cast<size_t>(i) * D + i].real();
    return tr;
}

double ChainDensity::hermiticity_error() const {
    const int D = dim();
    double worst = 0.0;
    for (int r = 0; r < D; ++r)
        for (int c = 0; c < D; ++c)
            worst = std::max(worst, std::abs(rho[static_cast<size_t>(r) * D + c] -
                                             std::conj(rho[static_cast<size_t>(c) * D + r])));
    return worst;
}

double phonon_distribution(const ChainDensity& density, int n) {
    if (n < 0) throw DomainError("phonon_distribution: n must be >= 0");
    const int jp = n % 2;
    const int m = n / 2;
    if (m >= density.m_size) return 0.0;
    int slot = -1;
    for (size_t k = 0; k < density.sectors.size(); ++k)
        if (density.sectors[k] == jp) slot = static_cast<int>(k);
    if (slot < 0) return 0.0;
    const int D = density.dim();
    const int Dm = D / 2;
    double pop = 0.0;
    for (int s = 0; s < 2; ++s) {
        const size_t i = static_cast<size_t>(s) * Dm +
                         static_cast<size_t>(slot) * density.m_size + m;
        pop += density.rho[i * D + i].real();
    }
    return pop;
}

std::vector<complexd> target_chain(const KtcsParams& target, int m_size) {
    target.validate();
    if (target.K != 2)
        throw ValidationError("target_chain: the generation scheme targets K = 2");
    const int n_top = 2 * (m_size - 1) + target.j;
    const TrioState state = build_ktcs(target, std::max(n_top, auto_n_max(target)));
    std::vector<complexd> chain(static_cast<size_t>(m_size), complexd{0.0, 0.0});
    double nrm2 = 0.0;
    for (int m = 0; m < m_size; ++m) {
        const int n = 2 * m + target.j;
        if (n <= state.n_max) chain[static_cast<size_t>(m)] = state.amplitudes[static_cast<size_t>(n)];
        nrm2 += std::norm(chain[static_cast<size_t>(m)]);
    }
    const double inv = 1.0 / std::sqrt(nrm2);
    for (auto& c : chain) c *= inv;
    return chain;
}

double chain_lowering_element(int m, int jpar, int p, int q) {
    if (m < 1 || jpar < 0 || jpar > 1 || p < 0 || q < 0)
        throw ValidationError("chain_lowering_element: bad arguments");
    const double n = 2.0 * m + jpar;
    return std::sqrt((n + p) * (n + p - 1.0) * (n + q) * (n + q - 1.0) * n * (n - 1.0));
}

double dark_state_residual(const SimConfig& cfg) {
    const Model mod = build_model(cfg);
    double worst = 0.0;
    for (int slot = 0; slot < mod.n_par; ++slot) {
        const auto& target = mod.target[static_cast<size_t>(slot)];
        if (target.empty()) continue;
        // H (|g> (x) T) = |e> (x) zeta [ (abc)^2 - xi^2 ] T
        double acc = 0.0;
        for (int m = 0; m < mod.M; ++m) {
            complexd v = -mod.xi2 * target[static_cast<size_t>(m)];
            if (m + 1 < mod.M)
                v += mod.g[static_cast<size_t>(slot)][static_cast<size_t>(m + 1)] *
                     target[static_cast<size_t>(m + 1)];
            acc += std::norm(mod.zeta * v);
        }
        worst = std::max(worst, std::sqrt(acc));
    }
    return worst;
}

double fidelity(const ChainDensity& density, const KtcsParams& target) {
    const auto T = target_chain(target, density.m_size);
    int slot = -1;
    for (size_t k = 0; k < density.sectors.size(); ++k)
        if (density.sectors[k] == target.j) slot = static_cast<int>(k);
    if (slot < 0) return 0.0;
    const int D = density.dim();
    complexd acc{0.0, 0.0};
    for (int m = 0; m < density.m_size; ++m) {
        const size_t im = static_cast<size_t>(slot) * density.m_size + m;
        for (int mp = 0; mp < density.m_size; ++mp) {
            const size_t imp = static_cast<size_t>(slot) * density.m_size + mp;
            acc += std::conj(T[static_cast<size_t>(m)]) * density.rho[im * D + imp] *
                   T[static_cast<size_t>(mp)];
        }
    }
    return acc.real();
}

}  // namespace ktcs::iontrap
