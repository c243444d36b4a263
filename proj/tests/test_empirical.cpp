#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "twocp/empirical.hpp"

using namespace twocp;

TEST_CASE("binning hand traces") {
    SignedConfig c({{0.1, 0.1}}, {});
    const auto [mp, mm] = empirical_measures(c, 2);
    CHECK(mp.counts == std::vector<std::uint64_t>{1, 0, 0, 0});
    CHECK(mm.total == 0);

    // points exactly at the cell centers of a 3x3 grid
    std::vector<Point2> centers;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            centers.push_back({(i + 0.5) / 3.0, (j + 0.5) / 3.0});
    const auto m = bin_points(centers, 3);
    for (auto v : m.counts) CHECK(v == 1);

    // boundary points fall in the lower-index cell
    CHECK(detail::bin_index(0.5, 2) == 0);
    CHECK(detail::bin_index(1.0, 4) == 3);
    CHECK(detail::bin_index(0.0, 4) == 0);
}

TEST_CASE("binning conserves mass") {
    Rng rng(4);
    const auto c = oracles::random_box_config(rng, 37, 41);
    const auto [mp, mm] = empirical_measures(c, 5);
    CHECK(mp.total == 37);
    CHECK(mm.total == 41);
    std::uint64_t s = 0;
    for (auto v : mp.counts) s += v;
    CHECK(s == 37);
}

TEST_CASE("uniformity distance values and range") {
    BinnedMeasure balanced{2, {5, 5, 5, 5}, 20};
    CHECK(uniformity_distance(balanced) == 0.0);
    BinnedMeasure onebin{2, {20, 0, 0, 0}, 20};
    CHECK(uniformity_distance(onebin) == Catch::Approx(0.75));
    BinnedMeasure empty{2, {0, 0, 0, 0}, 0};
    CHECK_THROWS(uniformity_distance(empty));
    Rng rng(6);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t k = 2 + rng.below(4);
        std::vector<std::uint64_t> counts(k * k);
        std::uint64_t tot = 0;
        for (auto& v : counts) {
            v = rng.below(10);
            tot += v;
        }
        if (tot == 0) continue;
        const double tv = uniformity_distance({k, counts, tot});
        CHECK(tv >= 0.0);
        CHECK(tv <= 1.0 - 1.0 / static_cast<double>(k * k) + 1e-12);
    }
}

TEST_CASE("uniformity distance of iid samples decreases with N") {
    Rng rng(123);
    auto avg_tv = [&rng](std::size_t n) {
        double s = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<Point2> pts(n);
            for (auto& p : pts) p = {rng.uniform01(), rng.uniform01()};
            s += uniformity_distance(bin_points(pts, 4));
        }
        return s / 20.0;
    };
    const double t100 = avg_tv(100);
    const double t1000 = avg_tv(1000);
    const double t10000 = avg_tv(10000);
    CAPTURE(t100, t1000, t10000);
    CHECK(t100 > t1000);
    CHECK(t1000 > t10000);
}

TEST_CASE("local window hand traces") {
    const auto zero = local_window(SignedConfig({}, {}), 4, {0.5, 0.5}, 1.0);
    CHECK(zero.n_plus == 0);
    CHECK(zero.n_minus == 0);
    CHECK(zero.discrepancy == 0);
    CHECK(zero.log_r_sum == 0.0);

    // one positive charge at (0.5, 0.5), N = 4: blown-up point (1,1),
    // window [0.5, 1.5)^2
    SignedConfig c({{0.5, 0.5}}, {{0.1, 0.1}});
    const auto w = local_window(c, 4, {0.5, 0.5}, 1.0);
    CHECK(w.n_plus == 1);
    CHECK(w.n_minus == 0);
    CHECK(w.discrepancy == 1);
    // blown-up neighbor sits at (0.2, 0.2): r = half of |(1,1)-(0.2,0.2)|
    CHECK(w.log_r_sum ==
          Catch::Approx(std::log(0.5 * std::hypot(0.8, 0.8))).margin(1e-12));

    // neutral configuration fully inside the window
    SignedConfig d({{0.4, 0.4}, {0.6, 0.6}}, {{0.4, 0.6}, {0.6, 0.4}});
    const auto wd = local_window(d, 1, {0.5, 0.5}, 2.0);
    CHECK(wd.n_plus == 2);
    CHECK(wd.n_minus == 2);
    CHECK(wd.discrepancy == 0);
}

TEST_CASE("discrepancy is antisymmetric under swapping the sign classes") {
    Rng rng(9);
    const auto c = oracles::random_box_config(rng, 6, 3);
    SignedConfig swapped(c.neg(), c.pos());
    for (int rep = 0; rep < 10; ++rep) {
        const Point2 tag{rng.uniform01(), rng.uniform01()};
        const auto a = local_window(c, 9, tag, 1.7);
        const auto b = local_window(swapped, 9, tag, 1.7);
        CHECK(a.discrepancy == -b.discrepancy);
    }
}

TEST_CASE("window counts are invariant under a common rigid shift") {
    Rng rng(10);
    const auto c = oracles::random_box_config(rng, 5, 5);
    const std::size_t N = 5;
    const Point2 tag{0.4, 0.6};
    const auto base = local_window(c, N, tag, 1.3);
    // shift all points and the tag by the same amount (in box coordinates)
    const Point2 sh{0.11, -0.07};
    std::vector<Point2> p = c.pos(), n = c.neg();
    for (auto& q : p) q = q + sh;
    for (auto& q : n) q = q + sh;
    const auto moved = local_window(SignedConfig(p, n), N,
                                    {tag.x + sh.x, tag.y + sh.y}, 1.3);
    CHECK(moved.n_plus == base.n_plus);
    CHECK(moved.n_minus == base.n_minus);
    CHECK(moved.discrepancy == base.discrepancy);
}

TEST_CASE("profile of a constant trace equals the single-sample value") {
    Rng rng(11);
    const auto c = oracles::random_box_config(rng, 8, 8);
    const auto one = averaged_window_profile({c}, 8, 2.0, 64, 5);
    const auto rep = averaged_window_profile({c, c, c}, 8, 2.0, 64, 5);
    CHECK(rep.mean_intensity_plus == Catch::Approx(one.mean_intensity_plus));
    CHECK(rep.mean_abs_discrepancy == Catch::Approx(one.mean_abs_discrepancy));
    CHECK(rep.se_intensity_plus == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("iid trace intensity matches one point per unit area per sign") {
    Rng rng(2024);
    const std::size_t N = 64;
    std::vector<SignedConfig> trace;
    for (int s = 0; s < 60; ++s) trace.push_back(oracles::random_box_config(rng, N, N));
    const auto prof = averaged_window_profile(trace, N, 2.0, 32, 909);
    CAPTURE(prof.mean_intensity_plus, prof.se_intensity_plus);
    CHECK(std::abs(prof.mean_intensity_plus - 1.0) <=
          3.0 * prof.se_intensity_plus + 1e-9);
    CHECK(std::abs(prof.mean_intensity_minus - 1.0) <=
          3.0 * prof.se_intensity_minus + 1e-9);
    CHECK(prof.mean_retained_area_fraction <= 1.0);
    CHECK(prof.mean_retained_area_fraction > 0.5);
}

TEST_CASE("profile rejects empty traces") {
    CHECK_THROWS(averaged_window_profile({}, 4, 1.0, 8, 1));
}
