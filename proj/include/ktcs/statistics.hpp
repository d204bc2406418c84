// statistics.hpp
// Number distribution, factorial moments, Mandel parameters, and
// Cauchy-Schwarz correlation measures of a KTCS.
//
// Every quantity is evaluated on two independent routes:
//  * a "moment" route that differentiates the normalization series
//    term-by-term (exact falling-factorial weighted sums), and
//  * the explicit printed closed forms in N, N', N''.
// The moment route is authoritative; the closed-form route is a validated
// convenience and any disagreement between the two is carried in the
// result structs instead of being hidden.

#pragma once

#include "ktcs/fock_core.hpp"

namespace ktcs {

enum class ModeId { a, b, c };

// chain offset of a mode: q for a, p for b, 0 for c
int charge_offset(ModeId mode, const KtcsParams& params);

// P_n = z^n N^2 / rho(n) on the residue class, 0 elsewhere (gate function).
double number_distribution(const KtcsParams& params, long long n);

// <n_x^(l)> = z^{l-o} N^2 d^l/dz^l (z^o / N^2) with o the charge offset,
// evaluated through term-wise derivatives of the series z^o S(z).
double factorial_moment(const KtcsParams& params, ModeId mode, int l, double z);

// <n_x^(l) n_y^(m)>, the nested-derivative closed forms, same term-wise
// evaluation. pair must name two distinct modes.
double joint_factorial_moment(const KtcsParams& params, ModeId x, ModeId y, int l, int m,
                              double z);

struct MandelTriple {
    double z = 0.0;
    double Ma = 0.0, Mb = 0.0, Mc = 0.0;
    // largest |explicit formula - moment route| over the three modes
    double path_discrepancy = 0.0;
};

// M_x = (<n_x^(2)> - <n_x>^2)/<n_x>. Throws DegenerateMean when a mean
// occupation underflows (below 1e-300).
MandelTriple mandel(const KtcsParams& params, double z);

// the z -> 0 limit, evaluated at z = 1e-8 with one Richardson step
MandelTriple mandel_limit_z0(const KtcsParams& params);

struct CsiMeasures {
    double z = 0.0;
    // moment route (authoritative)
    double J_ab = 0.0, J_ac = 0.0, J_bc = 0.0;
    double G_ab = 0.0, G_ac = 0.0, G_bc = 0.0;
    // explicit printed closed forms in N, N', N''
    double J_ab_closed = 0.0, J_ac_closed = 0.0, J_bc_closed = 0.0;
    // |moment - closed| scaled by the magnitude of the assembled terms
    double path_discrepancy = 0.0;
};

// J_xy = <n_x^(2)><n_y^(2)> - <n_x n_y>^2 and G_xy = J_xy/<n_x n_y>^2.
CsiMeasures csi_measures(const KtcsParams& params, double z);

// Bisection root of M_mode(z) = 0 to |dz| < 1e-5; the bracket is found by
// scanning z in multiplicative steps of 1.2 from 1e-3 up to z_hi.
// Throws NoSignChange if the Mandel parameter does not change sign.
double find_crossover(const KtcsParams& params, ModeId mode, double z_hi);

}  // namespace ktcs
