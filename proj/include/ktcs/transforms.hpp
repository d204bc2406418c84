// transforms.hpp
// Maps between members of the KTCS family: rotation between residue
// classes, decomposition of a KTCS into K phase-correlated TCS's (and
// back), the cross-dimension expansion, and the reconstruction of a KTCS
// from a double angular integral over ordinary coherent states.

#pragma once

#include <utility>
#include <vector>

#include "ktcs/fock_core.hpp"

namespace ktcs {

// [x]_K = x if x >= 0, x + K otherwise (two-branch definition, used by the
// rotation operator exponent).
int bracket_k(int x, int K);

// R_{Klm} |xi,p,q>_{Km} = (N_{Kl}/N_{Km}) xi^{-[m-l]_K} (abc)^{[m-l]_K} applied
// to the state; output is the residue-class-l member of the same family.
// Throws IndexOutOfRange unless 0 <= l < K.
TrioState rotate_index(const TrioState& state, int target_l);

// A KTCS written as a superposition of K TCS's whose eigenvalues sit evenly
// on the circle of radius |xi|:
//   |xi,p,q>_{Kj} = sum_{j'} coefficients[j'] |phases[j'], p, q>_{10}
struct TcsSuperposition {
    std::vector<complexd> coefficients;  // (N_{Kj}/(K N)) exp(-2 pi i j j'/K)
    std::vector<complexd> phases;        // xi_{Kj'} = xi exp(2 pi i j'/K)
};
TcsSuperposition ktcs_to_tcs(const KtcsParams& params);

// Inverse decomposition: TCS(xi) = N * sum_j |xi,p,q>_{Kj} / N_{Kj}.
// Returns the K (coefficient, member-state parameters) pairs.
std::vector<std::pair<complexd, KtcsParams>> tcs_to_ktcs(complexd xi, int p, int q, int K);

// Phase identity relating a rotated eigenvalue to a phase factor:
//   |chi exp(-2 pi i j/K)>_{Kj'} = exp(-2 pi i j j'/K) |chi>_{Kj'}.
// Returns the max per-amplitude difference between the two sides, built in
// the Fock representation.
double phase_identity_residual(complexd chi, int p, int q, int K, int j, int j_prime);

// Cross-dimension expansion: |xi>_{Kj} as K'*K terms |xi_{Kj''}>_{K'j'}:
//   coefficient[j'][j''] = (N_{Kj}(z)/K) exp(-2 pi i j j''/K) / N_{K'j'}(z)
// Reduces to ktcs_to_tcs at K' = 1 and to the identity at K' = K.
std::vector<std::vector<complexd>> cross_dimension(const KtcsParams& params, int K_prime);

// Sum a cross_dimension (or ktcs_to_tcs) expansion back into chain
// amplitudes; used to verify reconstructions at the amplitude level.
TrioState reconstruct_cross_dimension(const KtcsParams& params, int K_prime, int n_max);

// Reconstructs the state from the double angular integral over three
// phase-correlated coherent states with alpha*beta*gamma = xi, evaluated by
// the uniform trapezoid rule with quadrature_n nodes per angle (the
// integrand is 2 pi periodic and smooth, so the rule converges spectrally).
// Throws ConstraintViolated if |alpha*beta*gamma - xi| > 1e-12 or the
// amplitudes degenerate to zero.
TrioState coherent_integral_reconstruct(const KtcsParams& params, complexd alpha,
                                        complexd beta, complexd gamma, int quadrature_n,
                                        int n_max = -1);

// Largest amplitude the angular quadrature leaves on charge-violating Fock
// components (diagnostic for the reconstruction above; should sit at
// aliasing level for quadrature_n well above the truncation).
double coherent_integral_offchain(const KtcsParams& params, complexd alpha, complexd beta,
                                  complexd gamma, int quadrature_n, int n_max = -1);

}  // namespace ktcs
