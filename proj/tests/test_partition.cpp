#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "twocp/partition.hpp"

using namespace twocp;

TEST_CASE("beta = 0 gives log Z = 0 exactly") {
    for (auto method : {ZMethod::Direct, ZMethod::Importance}) {
        const auto z = estimate_log_Z(3, 0.0, 100, method, 7);
        CHECK(z.log_Z == 0.0);
        CHECK(z.std_err == 0.0);
    }
}

TEST_CASE("direct estimator rejects the infinite-variance regime") {
    CHECK_THROWS_WITH(estimate_log_Z(1, 1.0, 10, ZMethod::Direct, 1),
                      Catch::Matchers::ContainsSubstring("infinite-variance"));
    CHECK_NOTHROW(estimate_log_Z(1, 0.99, 10, ZMethod::Direct, 1));
    CHECK_THROWS(estimate_log_Z(1, 2.0, 10, ZMethod::Importance, 1));
}

TEST_CASE("N=1 estimates match the quadrature oracle") {
    // oracle: int_{box^2} |x-y|^{-beta/2} via the overlap-area reduction
    for (double beta : {0.5, 1.0}) {
        const double oracle = std::log(oracles::box_pair_power_integral(beta / 2.0));
        const auto z = estimate_log_Z(1, beta, 200000, ZMethod::Importance, 17);
        const double sigma = std::hypot(z.std_err, 1e-6);
        CAPTURE(beta, z.log_Z, oracle, z.std_err);
        CHECK(std::abs(z.log_Z - oracle) <= 3.0 * sigma);
        CHECK(z.std_err < 0.01);
    }
}

TEST_CASE("direct and importance agree at beta = 0.5") {
    const auto a = estimate_log_Z(1, 0.5, 200000, ZMethod::Direct, 5);
    const auto b = estimate_log_Z(1, 0.5, 200000, ZMethod::Importance, 6);
    const double sigma = std::hypot(a.std_err, b.std_err);
    CHECK(std::abs(a.log_Z - b.log_Z) <= 3.0 * sigma);
}

TEST_CASE("worker count never changes the estimate") {
    const auto a = estimate_log_Z(2, 1.1, 150000, ZMethod::Importance, 8, 1);
    const auto b = estimate_log_Z(2, 1.1, 150000, ZMethod::Importance, 8, 4);
    CHECK(a.log_Z == b.log_Z);
    CHECK(a.std_err == b.std_err);
    const auto c = estimate_dipole_integral(2, 1.1, 150000, 8, 1);
    const auto d = estimate_dipole_integral(2, 1.1, 150000, 8, 3);
    CHECK(c.log_Z == d.log_Z);
}

TEST_CASE("estimates are deterministic functions of (n, seed)") {
    const auto a = estimate_log_Z(2, 1.3, 5000, ZMethod::Importance, 99);
    const auto b = estimate_log_Z(2, 1.3, 5000, ZMethod::Importance, 99);
    CHECK(a.log_Z == b.log_Z);
    CHECK(a.std_err == b.std_err);
    const auto c = estimate_log_Z(2, 1.3, 5000, ZMethod::Importance, 100);
    CHECK(a.log_Z != c.log_Z);
}

TEST_CASE("common random numbers: direct reweighting is per-sample monotone") {
    const std::size_t n = 500;
    const auto ws = direct_sample_energies(2, n, 31);
    // the estimator is exactly the log-mean of e^{-beta/2 W} over this set
    for (double beta : {0.3, 0.6}) {
        detail::LogMeanAcc acc;
        for (double w : ws) acc.add(-0.5 * beta * w);
        const auto z = estimate_log_Z(2, beta, n, ZMethod::Direct, 31);
        CHECK(z.log_Z == Catch::Approx(acc.log_mean()).margin(1e-14));
    }
    // raising beta never raises the weight of a sample with W >= 0
    std::size_t nonneg = 0;
    for (double w : ws) {
        if (w >= 0.0 && std::isfinite(w)) {
            ++nonneg;
            CHECK(std::exp(-0.3 * w) >= std::exp(-0.35 * w));
        }
    }
    CHECK(nonneg > 0);
}

TEST_CASE("importance weights are finite for matched close dipoles") {
    // tight pairs dominate the weight; the proposal cancels the s^{-beta/2}
    // factor so log weights stay finite
    const auto z = estimate_log_Z(3, 1.8, 20000, ZMethod::Importance, 12);
    CHECK(std::isfinite(z.log_Z));
    CHECK(std::isfinite(z.std_err));
}

TEST_CASE("log K decomposition") {
    CHECK(log_K(4, 1.0, 0.5 * 4.0 * std::log(4.0)) == Catch::Approx(0.0));
    CHECK(log_K(1, 1.7, -0.3) == Catch::Approx(-0.3));
}

TEST_CASE("dipole integral: beta = 0 exact and N=1 oracle") {
    const auto z0 = estimate_dipole_integral(2, 0.0, 10, 3);
    CHECK(z0.log_Z == 0.0);

    const double beta = 1.0;
    const double oracle = std::log(oracles::box_pair_kernel_integral(
        [beta](double s) { return std::pow(std::min(1.0, 0.5 * s), -beta); }, beta));
    const auto z = estimate_dipole_integral(1, beta, 200000, 21);
    const double sigma = std::hypot(z.std_err, 1e-6);
    CAPTURE(z.log_Z, oracle, z.std_err);
    CHECK(std::abs(z.log_Z - oracle) <= 3.0 * sigma);
}

TEST_CASE("dipole integral stays under the fitted linear bound at beta = 1") {
    // log I_N <= (beta/2) N log N + c N for an internally fitted c
    const double beta = 1.0;
    std::vector<double> ns, ys;
    std::vector<ZEstimate> zs;
    for (std::size_t N = 2; N <= 6; ++N) {
        const auto z = estimate_dipole_integral(N, beta, 60000, 47 + N);
        zs.push_back(z);
        ns.push_back(static_cast<double>(N));
        ys.push_back(log_K(N, beta, z.log_Z));
    }
    const auto fit = oracles::least_squares_origin(ns, ys);
    // the fitted slope is an upper envelope up to MC noise
    const double c = fit.slope + 0.2;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double lhs = zs[i].log_Z;
        const double rhs = 0.5 * beta * ns[i] * std::log(ns[i]) + c * ns[i];
        CHECK(lhs <= rhs + 3.0 * zs[i].std_err);
    }
}
