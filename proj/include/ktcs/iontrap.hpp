// iontrap.hpp
// Trapped-ion generation scheme for the K = 2 family. A fourteen-laser
// drive on the sixth red sideband reduces, in the Lamb-Dicke limit, to
//   H = zeta [ (abc)^2 - xi^2 ] sigma_+ + h.c.
// with spontaneous decay at rate Gamma as the only dissipation channel.
// The dark stationary state is |g> tensor |xi,p,q>_{2j}.
//
// H and the jump operator conserve the charges and the chain parity, so
// the whole problem closes on the basis |s, j_par, m> with
// |Psi_{m j}> = |2m+q+j, 2m+p+j, 2m+j>: the density oracle propagates a
// 4(m_max+1)-dimensional matrix and the MCWF unraveling propagates pure
// states of the same size. Parity sectors carry independent amplitudes
// throughout; no cross-sector coefficient sharing is assumed.
//
// Units: Gamma = 1 in all rates and times (axes are Gamma*t, couplings
// zeta/Gamma).

#pragma once

#include <cstdint>

#include "ktcs/fock_core.hpp"

namespace ktcs::iontrap {

// Laser drive parameters, Rabi ratios fixed at 1 : 2 : 4 across the three
// geometric groups of sideband lasers.
struct LaserConfig {
    double omega = 1.0;     // base Rabi frequency (groups scale 1:2:4)
    double omega14 = 0.0;   // carrier laser Rabi frequency
    double eta = 0.1;       // Lamb-Dicke parameter
    double phi = 0.0;       // common sideband phase
    bool lamb_dicke_ok() const { return eta <= 0.3; }
};

struct Couplings {
    complexd zeta;        // (Omega eta^6 / 2) e^{-i phi}
    complexd xi_squared;  // (2 Omega14 / (Omega eta^6)) e^{+i phi}
};
Couplings xi_from_lasers(const LaserConfig& cfg);

// Checks the operator identity behind the scheme on the dense three-mode
// space truncated at n_max quanta per mode:
//   sum_{l=1..4} A_l^6 - 2 sum_{m=5..10} A_m^6 + 4 sum_{n=11..13} A_n^6
//     = 360 (abc)^2
// applied to `trials` random unit vectors. Returns the largest norm
// difference relative to the operator scale.
double verify_laser_identity(int n_max, int trials, std::uint64_t seed = 0x1d5eedULL);

struct SimConfig {
    complexd xi{0.0, 0.0};    // target eigenvalue
    complexd zeta{0.0, 0.0};  // coupling in units of Gamma
    double gamma = 1.0;       // decay rate (the unit of time)
    int p = 0, q = 0;
    double w = 0.0;  // weight of the odd-parity component of the initial state
    int l = 0;       // initial chain index: |Psi_{l,0}> and/or |Psi_{l,1}>
    int m_max = -1;  // chain truncation; -1 picks target tail < 1e-12 plus 5 guard levels
    double dt = -1.0;    // Gamma*dt; -1 picks the integrator default
    double t_max = 200.0;  // Gamma*t
    int n_traj = 1000;
    std::uint64_t seed = 1;
    std::vector<double> checkpoints;  // Gamma*t observation times; empty = 10 uniform

    void validate() const;
};

struct Checkpoint {
    double gamma_t = 0.0;
    double F0 = 0.0, F1 = 0.0;  // fidelity against |xi,p,q>_{20}, _{21} (with |g>)
    std::vector<double> Pi;     // phonon distribution over n = 0 .. 2*m_size-1
};

// Hermitian density over |s, j_par, m> for the parity sectors a run touches.
struct ChainDensity {
    int m_size = 0;            // chain levels per sector (m_max + 1)
    std::vector<int> sectors;  // parity sectors present (subset of {0,1})
    std::vector<complexd> rho; // dense, dimension (2 * sectors * m_size)^2

    int dim() const { return 2 * static_cast<int>(sectors.size()) * m_size; }
    double trace() const;
    double hermiticity_error() const;
};

struct DensityRun {
    std::vector<Checkpoint> checkpoints;
    double max_trace_drift = 0.0;
    double final_rhs_norm = 0.0;  // Frobenius norm of d(rho)/dt at t_max
    double dt = 0.0;
    ChainDensity final_state;
};

// Deterministic RK4 integration of
//   d rho/dt = -i[H, rho] + Gamma (s- rho s+ - {s+ s-, rho}/2).
// dt obeys dt*(Gamma + spectral radius of H) < 0.05; trace drift beyond
// 1e-8 throws StepTooLarge. This is the oracle path.
DensityRun evolve_density(const SimConfig& cfg);

struct McwfCheckpoint {
    double gamma_t = 0.0;
    double F0 = 0.0, F0_err = 0.0;
    double F1 = 0.0, F1_err = 0.0;
    std::vector<double> Pi, Pi_err;
};

struct McwfRun {
    std::vector<McwfCheckpoint> checkpoints;
    int n_traj = 0;
    double dt = 0.0;
    double max_jump_prob = 0.0;
};

// Monte Carlo wave-function unraveling: drift under the exact propagator
// exp(-i H_eff dt) with H_eff = H - i(Gamma/2) s+ s-, first-order jump
// decision per step (probability Gamma <s+ s-> dt, capped at 0.01 by the
// default dt), renormalization after either branch. Deterministic given
// cfg.seed; trajectory i uses sub_seed(seed, i). A step whose jump
// probability exceeds 0.1 throws StepTooLarge.
McwfRun mcwf_run(const SimConfig& cfg);

// Pi_n = population of the chain element n (= 2m + j_par), traced over the
// electronic state.
double phonon_distribution(const ChainDensity& rho, int n);

// F_j = <target, g| rho |target, g> with the target KTCS built at the same
// truncation. target.K must be 2.
double fidelity(const ChainDensity& rho, const KtcsParams& target);

// chain amplitudes of |xi,p,q>_{2j} in sector coordinates m = (n-j)/2,
// renormalized over the truncation
std::vector<complexd> target_chain(const KtcsParams& target, int m_size);

// <Psi_{m-1,j}|(abc)^2|Psi_{mj}> = sqrt(rho(2m+j)/rho(2m-2+j)), m >= 1
double chain_lowering_element(int m, int jpar, int p, int q);

// || H (|g> (x) target_j) || maximized over the parity sectors the config
// carries; zero up to truncation since the target is the dark state
double dark_state_residual(const SimConfig& cfg);

}  // namespace ktcs::iontrap
