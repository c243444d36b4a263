#ifndef TWOCP_EMPIRICAL_HPP
#define TWOCP_EMPIRICAL_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "twocp/geometry.hpp"
#include "twocp/rng.hpp"

namespace twocp {

/// Histogram of points on a k x k grid over the unit box, x-major cells.
struct BinnedMeasure {
    std::size_t k = 0;
    std::vector<std::uint64_t> counts; // size k*k
    std::uint64_t total = 0;
};

namespace detail {

// boundary points go to the lower-index cell
inline std::size_t bin_index(double x, std::size_t k) {
    if (x <= 0.0) return 0;
    const double scaled = x * static_cast<double>(k);
    const std::size_t i = static_cast<std::size_t>(std::ceil(scaled)) - 1;
    return std::min(i, k - 1);
}

} // namespace detail

inline BinnedMeasure bin_points(const std::vector<Point2>& pts, std::size_t k) {
    if (k < 1) throw std::invalid_argument("bin_points: k >= 1 required");
    BinnedMeasure m;
    m.k = k;
    m.counts.assign(k * k, 0);
    for (const auto& p : pts) {
        if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0)
            throw std::invalid_argument("bin_points: point outside the unit box");
        ++m.counts[detail::bin_index(p.x, k) * k + detail::bin_index(p.y, k)];
        ++m.total;
    }
    return m;
}

inline std::pair<BinnedMeasure, BinnedMeasure> empirical_measures(
    const SignedConfig& c, std::size_t k) {
    return {bin_points(c.pos(), k), bin_points(c.neg(), k)};
}

/// Total-variation distance between the binned empirical distribution and
/// the uniform distribution on the k^2 cells.
inline double uniformity_distance(const BinnedMeasure& m) {
    if (m.total == 0)
        throw std::invalid_argument("uniformity_distance: empty measure");
    const double u = 1.0 / static_cast<double>(m.k * m.k);
    double tv = 0.0;
    for (auto c : m.counts)
        tv += std::abs(static_cast<double>(c) / static_cast<double>(m.total) - u);
    return 0.5 * tv;
}

/// Window statistics of the blow-up (coordinates scaled by sqrt(N)) around
/// the blown-up tag: square window of side R, half-open on the upper edges.
struct LocalWindowStats {
    Point2 center{};      // sqrt(N) * tag
    double window_side = 0.0;
    std::int64_t n_plus = 0;
    std::int64_t n_minus = 0;
    std::int64_t discrepancy = 0;
    double log_r_sum = 0.0; // sum of log(max(r, tau)) over window points
};

inline LocalWindowStats local_window(const SignedConfig& c, std::size_t N,
                                     Point2 tag, double R, double tau = 1e-6) {
    if (!(R > 0.0)) throw std::invalid_argument("local_window: R > 0 required");
    LocalWindowStats out;
    const double s = std::sqrt(static_cast<double>(N));
    out.center = {s * tag.x, s * tag.y};
    out.window_side = R;
    if (c.total() == 0) return out;

    const double xlo = out.center.x - 0.5 * R, xhi = out.center.x + 0.5 * R;
    const double ylo = out.center.y - 0.5 * R, yhi = out.center.y + 0.5 * R;
    auto inside = [&](Point2 p) {
        return p.x >= xlo && p.x < xhi && p.y >= ylo && p.y < yhi;
    };

    const SignedConfig blown = rescale_blowup(c, N);
    std::vector<double> r(blown.total(), 1.0); // a lone point has r = 1
    if (blown.total() >= 2) {
        const auto nn = nn_half_distances(blown);
        for (std::size_t i = 0; i < blown.n_pos(); ++i) r[i] = nn.r_pos[i];
        for (std::size_t i = 0; i < blown.n_neg(); ++i)
            r[blown.n_pos() + i] = nn.r_neg[i];
    }
    for (std::size_t i = 0; i < blown.total(); ++i) {
        if (!inside(blown.point(i))) continue;
        if (blown.sign(i) > 0)
            ++out.n_plus;
        else
            ++out.n_minus;
        out.log_r_sum += std::log(std::max(r[i], tau));
    }
    out.discrepancy = out.n_plus - out.n_minus;
    return out;
}

struct WindowProfile {
    double R = 0.0;
    double mean_intensity_plus = 0.0;
    double mean_intensity_minus = 0.0;
    double mean_abs_discrepancy = 0.0;
    double mean_logr_density = 0.0;
    double se_intensity_plus = 0.0;
    double se_intensity_minus = 0.0;
    double se_abs_discrepancy = 0.0;
    double se_logr_density = 0.0;
    double mean_retained_area_fraction = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_tags = 0;
};

/// Monte Carlo average over uniform tags and trace samples. Tag t comes
/// from the fixed sub-stream t of the seed, shared across trace samples.
/// Windows may protrude outside the blown-up box; counts are raw, the
/// retained-area fraction is reported, and intensities are normalized by
/// the retained area (the in-box part of the window). Standard errors come
/// from the between-sample spread of per-sample tag averages.
inline WindowProfile averaged_window_profile(const std::vector<SignedConfig>& trace,
                                             std::size_t N, double R,
                                             std::size_t n_tags,
                                             std::uint64_t seed) {
    if (trace.empty())
        throw std::invalid_argument("averaged_window_profile: empty trace");
    if (n_tags < 1)
        throw std::invalid_argument("averaged_window_profile: n_tags >= 1");
    WindowProfile out;
    out.R = R;
    out.n_samples = trace.size();
    out.n_tags = n_tags;
    const double side = std::sqrt(static_cast<double>(N));
    const double area = R * R;

    std::vector<Point2> tags(n_tags);
    for (std::size_t t = 0; t < n_tags; ++t) {
        Rng rng = Rng::stream(seed, t);
        tags[t] = {rng.uniform01(), rng.uniform01()};
    }

    std::vector<std::array<double, 5>> per_sample;
    per_sample.reserve(trace.size());
    for (std::size_t s = 0; s < trace.size(); ++s) {
        std::array<double, 5> acc{};
        for (std::size_t t = 0; t < n_tags; ++t) {
            const auto w = local_window(trace[s], N, tags[t], R);
            const double cx = w.center.x, cy = w.center.y;
            const double ox = std::max(0.0, std::min(cx + 0.5 * R, side) -
                                                std::max(cx - 0.5 * R, 0.0));
            const double oy = std::max(0.0, std::min(cy + 0.5 * R, side) -
                                                std::max(cy - 0.5 * R, 0.0));
            const double retained = std::max(ox * oy, 1e-300);
            acc[0] += static_cast<double>(w.n_plus) / retained;
            acc[1] += static_cast<double>(w.n_minus) / retained;
            acc[2] += std::abs(static_cast<double>(w.discrepancy));
            acc[3] += w.log_r_sum / retained;
            acc[4] += ox * oy / area;
        }
        for (auto& v : acc) v /= static_cast<double>(n_tags);
        per_sample.push_back(acc);
    }
    const double n = static_cast<double>(per_sample.size());
    std::array<double, 5> mean{}, var{};
    for (const auto& a : per_sample)
        for (int i = 0; i < 5; ++i) mean[i] += a[i];
    for (auto& v : mean) v /= n;
    for (const auto& a : per_sample)
        for (int i = 0; i < 5; ++i) var[i] += (a[i] - mean[i]) * (a[i] - mean[i]);
    for (auto& v : var) v = (n > 1.5) ? v / (n * (n - 1.0)) : 0.0;

    out.mean_intensity_plus = mean[0];
    out.mean_intensity_minus = mean[1];
    out.mean_abs_discrepancy = mean[2];
    out.mean_logr_density = mean[3];
    out.mean_retained_area_fraction = mean[4];
    out.se_intensity_plus = std::sqrt(var[0]);
    out.se_intensity_minus = std::sqrt(var[1]);
    out.se_abs_discrepancy = std::sqrt(var[2]);
    out.se_logr_density = std::sqrt(var[3]);
    return out;
}

} // namespace twocp

#endif
