#include <doctest.h>

#include "ktcs/transforms.hpp"

using ktcs::complexd;
using ktcs::KtcsParams;
using ktcs::TrioState;

namespace {

KtcsParams make(complexd xi, int p, int q, int K, int j) {
    KtcsParams out;
    out.xi_mod = std::abs(xi);
    out.xi_arg = std::arg(xi);
    out.p = p;
    out.q = q;
    out.K = K;
    out.j = j;
    return out;
}

double max_amp_diff(const TrioState& a, const TrioState& b) {
    const size_t n = std::min(a.amplitudes.size(), b.amplitudes.size());
    double worst = 0.0;
    for (size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(a.amplitudes[i] - b.amplitudes[i]));
    for (size_t i = n; i < a.amplitudes.size(); ++i)
        worst = std::max(worst, std::abs(a.amplitudes[i]));
    for (size_t i = n; i < b.amplitudes.size(); ++i)
        worst = std::max(worst, std::abs(b.amplitudes[i]));
    return worst;
}

// sum a TCS decomposition back into chain amplitudes on a fixed truncation
TrioState sum_tcs(const ktcs::TcsSuperposition& dec, int p, int q, int n_max) {
    TrioState acc;
    acc.p = p;
    acc.q = q;
    acc.n_max = n_max;
    acc.amplitudes.assign(static_cast<size_t>(n_max) + 1, complexd{0.0, 0.0});
    for (size_t k = 0; k < dec.coefficients.size(); ++k) {
        const TrioState term = ktcs::build_ktcs(make(dec.phases[k], p, q, 1, 0), n_max);
        for (size_t n = 0; n < term.amplitudes.size(); ++n)
            acc.amplitudes[n] += dec.coefficients[k] * term.amplitudes[n];
    }
    return acc;
}

}  // namespace

TEST_SUITE("transforms") {

TEST_CASE("bracket: both branches of the two-branch definition") {
    CHECK(ktcs::bracket_k(0, 3) == 0);
    CHECK(ktcs::bracket_k(2, 3) == 2);
    CHECK(ktcs::bracket_k(-1, 3) == 2);
    CHECK(ktcs::bracket_k(-3, 4) == 1);
}

TEST_CASE("rotate_index: identity at l = m") {
    const auto params = make({1.5, 0.0}, 0, 1, 3, 1);
    const TrioState s = ktcs::build_ktcs(params);
    const TrioState r = ktcs::rotate_index(s, 1);
    CHECK(max_amp_diff(s, r) == 0.0);
}

TEST_CASE("rotate_index matches a direct build of the target index") {
    {
        const auto src = make({2.0, 0.0}, 0, 0, 2, 1);
        const TrioState rotated = ktcs::rotate_index(ktcs::build_ktcs(src), 0);
        const TrioState direct = ktcs::build_ktcs(make({2.0, 0.0}, 0, 0, 2, 0), rotated.n_max);
        CHECK(max_amp_diff(rotated, direct) < 1e-10);
    }
    {
        const auto src = make(complexd{1.0, 1.0}, 1, 0, 3, 0);
        const TrioState rotated = ktcs::rotate_index(ktcs::build_ktcs(src), 2);
        const TrioState direct =
            ktcs::build_ktcs(make(complexd{1.0, 1.0}, 1, 0, 3, 2), rotated.n_max);
        CHECK(max_amp_diff(rotated, direct) < 1e-10);
    }
    CHECK_THROWS_AS(ktcs::rotate_index(ktcs::build_ktcs(make({1.0, 0.0}, 0, 0, 2, 0)), 5),
                    ktcs::IndexOutOfRange);
}

TEST_CASE("rotation round trip is the identity") {
    const auto params = make(complexd{1.2, -0.4}, 2, 1, 4, 3);
    const TrioState s = ktcs::build_ktcs(params);
    const TrioState fwd = ktcs::rotate_index(s, 1);
    const TrioState back = ktcs::rotate_index(fwd, 3);
    CHECK(max_amp_diff(s, back) < 1e-10);
}

TEST_CASE("ktcs_to_tcs: degenerate K = 1 and even/odd cancellation") {
    const auto dec1 = ktcs::ktcs_to_tcs(make({1.3, 0.0}, 1, 0, 1, 0));
    REQUIRE(dec1.coefficients.size() == 1);
    CHECK(std::abs(dec1.coefficients[0] - complexd{1.0, 0.0}) < 1e-12);

    // K = 2, j = 0, real xi: equal weights on TCS(+xi), TCS(-xi); odd chain
    // amplitudes cancel destructively
    const auto params = make({1.5, 0.0}, 0, 0, 2, 0);
    const auto dec = ktcs::ktcs_to_tcs(params);
    CHECK(std::abs(dec.coefficients[0] - dec.coefficients[1]) < 1e-13);
    CHECK(std::abs(dec.phases[0] + dec.phases[1]) < 1e-12);
    const TrioState direct = ktcs::build_ktcs(params);
    const TrioState rec = sum_tcs(dec, 0, 0, direct.n_max);
    for (int n = 1; n <= direct.n_max; n += 2)
        CHECK(std::abs(rec.amplitudes[static_cast<size_t>(n)]) < 1e-13);
}

TEST_CASE("ktcs_to_tcs reconstructs the state") {
    const auto params = make({2.0, 0.0}, 1, 2, 3, 1);
    const TrioState direct = ktcs::build_ktcs(params);
    const auto dec = ktcs::ktcs_to_tcs(params);
    // the TCS members spread over all residues; build on their truncation
    const int n_max = std::max(direct.n_max,
                               ktcs::auto_n_max(make({2.0, 0.0}, 1, 2, 1, 0)));
    const TrioState rec = sum_tcs(dec, 1, 2, n_max);
    const TrioState direct_wide = ktcs::build_ktcs(params, n_max);
    CHECK(max_amp_diff(rec, direct_wide) < 1e-12);
}

TEST_CASE("tcs_to_ktcs: degenerate K = 1 and round trip") {
    const auto dec1 = ktcs::tcs_to_ktcs({1.1, 0.0}, 0, 1, 1);
    REQUIRE(dec1.size() == 1);
    CHECK(std::abs(dec1[0].first - complexd{1.0, 0.0}) < 1e-12);

    // TCS(xi) = N sum_j |xi>_{Kj}/N_{Kj}: reconstruct the TCS amplitudes
    const complexd xi{1.5, 0.0};
    const auto dec = ktcs::tcs_to_ktcs(xi, 0, 1, 2);
    REQUIRE(dec.size() == 2);
    const TrioState tcs = ktcs::build_ktcs(make(xi, 0, 1, 1, 0));
    TrioState rec;
    rec.p = 0;
    rec.q = 1;
    rec.n_max = tcs.n_max;
    rec.amplitudes.assign(static_cast<size_t>(tcs.n_max) + 1, complexd{0.0, 0.0});
    for (const auto& [coef, member] : dec) {
        const TrioState term = ktcs::build_ktcs(member, tcs.n_max);
        for (size_t n = 0; n < term.amplitudes.size(); ++n)
            rec.amplitudes[n] += coef * term.amplitudes[n];
    }
    CHECK(max_amp_diff(rec, tcs) < 1e-12);
}

TEST_CASE("phase identity: rotated eigenvalue equals a phase factor") {
    CHECK(ktcs::phase_identity_residual(complexd{1.0, 0.5}, 0, 0, 4, 3, 2) < 1e-13);
    CHECK(ktcs::phase_identity_residual(complexd{2.0, 0.0}, 1, 2, 3, 1, 1) < 1e-13);
    CHECK(ktcs::phase_identity_residual(complexd{0.8, -0.3}, 0, 1, 2, 1, 0) < 1e-13);
}

TEST_CASE("cross_dimension: special cases K' = K and K' = 1") {
    const auto params = make({1.7, 0.0}, 0, 0, 2, 1);
    {
        const TrioState rec = ktcs::reconstruct_cross_dimension(params, 2, -1);
        const TrioState direct = ktcs::build_ktcs(params, rec.n_max);
        CHECK(max_amp_diff(rec, direct) < 1e-12);
    }
    {
        // K' = 1 collapses to the TCS decomposition
        const auto coef = ktcs::cross_dimension(params, 1);
        const auto dec = ktcs::ktcs_to_tcs(params);
        REQUIRE(coef.size() == 1);
        for (int jpp = 0; jpp < 2; ++jpp)
            CHECK(std::abs(coef[0][static_cast<size_t>(jpp)] -
                           dec.coefficients[static_cast<size_t>(jpp)]) < 1e-13);
    }
}

TEST_CASE("cross_dimension reconstructs across K' = 3") {
    const auto params = make({2.0, 0.0}, 0, 0, 2, 1);
    const TrioState rec = ktcs::reconstruct_cross_dimension(params, 3, -1);
    const TrioState direct = ktcs::build_ktcs(params, rec.n_max);
    CHECK(max_amp_diff(rec, direct) < 1e-11);
}

TEST_CASE("coherent-state integral reproduces the TCS at K = 1") {
    const complexd xi{1.0, 0.0};
    const auto params = make(xi, 0, 0, 1, 0);
    const complexd root = std::pow(xi, 1.0 / 3.0);
    const TrioState rec = ktcs::coherent_integral_reconstruct(params, root, root, root, 64);
    const TrioState direct = ktcs::build_ktcs(params, rec.n_max);
    CHECK(max_amp_diff(rec, direct) < 1e-10);
}

TEST_CASE("coherent-state integral: constraint violations are rejected") {
    const auto params = make({1.0, 0.0}, 1, 1, 2, 0);
    CHECK_THROWS_AS(
        ktcs::coherent_integral_reconstruct(params, {1.0, 0.0}, {1.0, 0.0}, {1.5, 0.0}, 32),
        ktcs::ConstraintViolated);
    const auto vac = make({0.0, 0.0}, 1, 1, 2, 0);
    CHECK_THROWS_AS(
        ktcs::coherent_integral_reconstruct(vac, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, 32),
        ktcs::ConstraintViolated);
}

TEST_CASE("coherent-state integral matches the direct build at K = 2") {
    const auto params = make({1.0, 0.0}, 0, 0, 2, 0);
    const TrioState rec =
        ktcs::coherent_integral_reconstruct(params, {1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, 256);
    const TrioState direct = ktcs::build_ktcs(params, rec.n_max);
    CHECK(max_amp_diff(rec, direct) < 1e-8);
}

TEST_CASE("coherent-state integral: off-chain leakage decays with nodes") {
    const auto params = make({1.0, 0.0}, 0, 1, 2, 0);
    const complexd a{1.0, 0.0}, b{1.0, 0.0}, g{1.0, 0.0};
    const double off8 = ktcs::coherent_integral_offchain(params, a, b, g, 8);
    const double off12 = ktcs::coherent_integral_offchain(params, a, b, g, 12);
    const double off64 = ktcs::coherent_integral_offchain(params, a, b, g, 64);
    CHECK(off12 < off8);
    CHECK(off64 < off12);
    CHECK(off64 < 1e-12);  // pure Fourier orthogonality at high node count
}

}  // TEST_SUITE
