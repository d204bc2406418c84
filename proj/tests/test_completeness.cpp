#include <doctest.h>

#include "ktcs/completeness.hpp"
#include "oracles.hpp"

using ktcs::KtcsParams;

TEST_SUITE("completeness") {

TEST_CASE("bessel_k: reference value, small-argument limit, symmetry") {
    CHECK(ktcs::bessel_k(0, 1.0) == doctest::Approx(0.4210244382).epsilon(1e-10));
    CHECK(ktcs::bessel_k(1, 1e-6) * 1e-6 == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(ktcs::bessel_k(-3, 2.5) == ktcs::bessel_k(3, 2.5));
    CHECK_THROWS_AS(ktcs::bessel_k(0, 0.0), ktcs::DomainError);
    CHECK_THROWS_AS(ktcs::bessel_k(2, -1.0), ktcs::DomainError);
}

TEST_CASE("bessel_k agrees with the integral-representation oracle") {
    CHECK(ktcs::bessel_k(3, 2.0) ==
          doctest::Approx(oracle::bessel_k_integral(3, 2.0)).epsilon(1e-8));
    for (int nu : {0, 1, 2, 5}) {
        for (double x : {0.4, 1.9, 2.1, 7.0, 31.0}) {
            CHECK(ktcs::bessel_k(nu, x) ==
                  doctest::Approx(oracle::bessel_k_integral(nu, x)).epsilon(1e-10));
        }
    }
}

TEST_CASE("bessel_k satisfies the three-term recurrence") {
    for (int n = 1; n <= 8; ++n) {
        for (double x : {0.1, 0.7, 2.3, 11.0, 50.0}) {
            const double lhs = ktcs::bessel_k(n + 1, x) - ktcs::bessel_k(n - 1, x);
            const double rhs = (2.0 * n / x) * ktcs::bessel_k(n, x);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
        }
    }
}

TEST_CASE("weight: positive on a wide log grid, symmetric in |q-p|, decaying") {
    for (int p = 0; p <= 4; p += 2) {
        for (int q = 0; q <= 4; q += 2) {
            for (double x = 1e-3; x <= 1e3; x *= 10.0) {
                CHECK(ktcs::weight_tilde(x, p, q) > 0.0);
            }
        }
    }
    CHECK(ktcs::weight_tilde(2.0, 1, 3) == doctest::Approx(ktcs::weight_tilde(2.0, 3, 1)));
    CHECK(ktcs::weight_tilde(9.0, 0, 0) < ktcs::weight_tilde(5.0, 0, 0));

    // full weight W_Kj = W~/(pi N^2) stays positive wherever N exists
    KtcsParams params;
    params.xi_mod = 1.0;
    params.K = 2;
    params.j = 1;
    for (double r2 : {0.3, 2.0, 16.0}) CHECK(ktcs::weight_full(params, r2) > 0.0);
}

TEST_CASE("verify_moments: forced low moments") {
    ktcs::MomentProblem zero;
    zero.p = 0;
    zero.q = 0;
    zero.n_max_check = 1;
    zero.tolerance = 1e-6;
    const auto rep = ktcs::verify_moments(zero);
    CHECK(rep.entries[0].computed == doctest::Approx(1.0).epsilon(1e-6));

    ktcs::MomentProblem mixed;
    mixed.p = 1;
    mixed.q = 2;
    mixed.n_max_check = 3;
    mixed.tolerance = 1e-6;
    const auto rep2 = ktcs::verify_moments(mixed);
    CHECK(rep2.entries[3].computed == doctest::Approx(17280.0).epsilon(1e-6));  // 4! 5! 3!
}

TEST_CASE("verify_moments: high moment at loosened tolerance") {
    ktcs::MomentProblem hard;
    hard.p = 0;
    hard.q = 3;
    hard.n_max_check = 7;
    hard.tolerance = 1e-5;
    const auto rep = ktcs::verify_moments(hard);
    const double expected = std::exp(ktcs::log_rho(7, 0, 3));  // 7! 10! 7!
    CHECK(rep.entries[7].computed == doctest::Approx(expected).epsilon(1e-5));
    CHECK(rep.quadrature_nodes > 0);

    const std::string j = rep.to_json();
    CHECK(j.find("\"rel_error\"") != std::string::npos);
    CHECK(j.find("\"quadrature_nodes\"") != std::string::npos);
}

TEST_CASE("verify_moments guards its precision budget") {
    ktcs::MomentProblem over;
    over.n_max_check = 11;
    CHECK_THROWS_AS(ktcs::verify_moments(over), ktcs::ValidationError);
}

TEST_CASE("reproducing kernel: quadrature reconstruction of a member state") {
    KtcsParams params;
    params.xi_mod = 1.0;
    params.K = 1;
    params.j = 0;
    const auto coarse = ktcs::reproducing_kernel_check(params, 100, 64, 32.0);
    const auto fine = ktcs::reproducing_kernel_check(params, 200, 64, 32.0);
    CHECK(fine.max_residual < coarse.max_residual);  // quadrature convergence
    CHECK(fine.max_residual < 1e-4);
}

TEST_CASE("reproducing kernel: angular integral kills off-residue amplitudes") {
    KtcsParams params;
    params.xi_mod = 1.0;
    params.K = 2;
    params.j = 0;
    const auto r = ktcs::reproducing_kernel_check(params, 200, 64, 32.0);
    CHECK(r.max_residual < 1e-4);
    CHECK(r.max_off_residue < 1e-12);
}

TEST_CASE("resolution of unity on a finite principal submatrix") {
    for (int K : {1, 2, 3}) {
        const auto dev = ktcs::unity_deviation(K, 0, 1, 6, 400, 64);
        double worst = 0.0;
        for (const auto& row : dev)
            for (double v : row) worst = std::max(worst, v);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("carleman: the moment problem solution is never unique") {
    const auto k1 = ktcs::carleman_test(1, 0, 0, 0, 1000000);
    CHECK(k1.estimate == doctest::Approx(-1.5).epsilon(0.05 / 1.5));
    CHECK(k1.non_unique);

    const auto k3 = ktcs::carleman_test(3, 0, 0, 0, 1000000);
    CHECK(k3.estimate == doctest::Approx(-4.5).epsilon(0.15 / 4.5));
    CHECK(k3.non_unique);

    // charges shift nothing in the limit
    const auto charged = ktcs::carleman_test(2, 1, 3, 2, 1000000);
    CHECK(charged.estimate == doctest::Approx(-3.0).epsilon(0.05));
}

TEST_CASE("carleman: the probe ratio approaches the limit monotonically") {
    // K = 1: the raw ratio decreases toward -3/2 across three decades
    double prev = 0.0;
    bool first = true;
    for (long long n : {10000LL, 100000LL, 1000000LL, 10000000LL}) {
        const auto r = ktcs::carleman_test(1, 0, 0, 0, n);
        if (!first) CHECK(r.ratio_at_probe < prev);
        prev = r.ratio_at_probe;
        first = false;
        CHECK(r.ratio_at_probe > -1.5);
    }
    // K = 3 approaches from below; track |ratio - limit| instead
    double prev_gap = 1e9;
    for (long long n : {10000LL, 100000LL, 1000000LL}) {
        const auto r = ktcs::carleman_test(3, 0, 0, 0, n);
        const double gap = std::abs(r.ratio_at_probe + 4.5);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
}

}  // TEST_SUITE
