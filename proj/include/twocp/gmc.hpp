#ifndef TWOCP_GMC_HPP
#define TWOCP_GMC_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "twocp/geometry.hpp"
#include "twocp/rng.hpp"

namespace twocp {

struct GffKernelParams {
    double r = 8.0;        // disk radius, > 2
    double eps = 1.0 / 64; // circle-average radius, in (0,1)
    int n_angle = 64;      // angular quadrature order for overlapping circles

    void validate() const {
        if (!(r > 2.0)) throw std::invalid_argument("GffKernelParams: r > 2 required");
        if (!(eps > 0.0) || eps >= 1.0)
            throw std::invalid_argument("GffKernelParams: eps in (0,1) required");
        if (n_angle < 16)
            throw std::invalid_argument("GffKernelParams: n_angle >= 16 required");
    }
};

namespace detail {

inline std::complex<double> cplx(Point2 p) { return {p.x, p.y}; }

} // namespace detail

/// Zero-boundary disk covariance
///   g_r(x,y) = -log|x/r - y/r| + log|1 - x conj(y)/r^2|.
inline double gff_covariance(const GffKernelParams& params, Point2 x, Point2 y) {
    params.validate();
    const double r = params.r;
    if (norm(x) >= r || norm(y) >= r)
        throw std::invalid_argument("gff_covariance: point outside the open disk");
    if (x.x == y.x && x.y == y.y)
        throw std::invalid_argument("gff_covariance: diverges at x == y");
    const auto zx = detail::cplx(x) / r, zy = detail::cplx(y) / r;
    return -std::log(std::abs(zx - zy)) + std::log(std::abs(1.0 - zx * std::conj(zy)));
}

/// Conformal radius of the disk from x: C(x; D_r) = r (1 - |x|^2/r^2).
inline double conformal_radius(const GffKernelParams& params, Point2 x) {
    return params.r * (1.0 - norm2(x) / (params.r * params.r));
}

/// Circle-averaged covariance g_r^eps. Exact equality with g_r when
/// |x-y| >= 2 eps. For closer points the -log factor is averaged in closed
/// form over the inner circle and by n_angle-point quadrature over the
/// outer one; the harmonic remainder averages to itself.
inline double circle_avg_covariance(const GffKernelParams& params, Point2 x,
                                    Point2 y) {
    params.validate();
    const double r = params.r;
    if (norm(x) + params.eps >= r || norm(y) + params.eps >= r)
        throw std::invalid_argument(
            "circle_avg_covariance: needs clearance eps from the boundary");
    const double sep = dist(x, y);
    if (sep >= 2.0 * params.eps) return gff_covariance(params, x, y);
    // harmonic part log r + log|1 - x conj(y)/r^2| is exact at the centers
    const auto zx = detail::cplx(x), zy = detail::cplx(y);
    const double harmonic =
        std::log(r) + std::log(std::abs(1.0 - zx * std::conj(zy) / (r * r)));
    // inner average of -log|z-w| over |w-y|=eps is -log(max(|z-y|, eps))
    double s = 0.0;
    for (int j = 0; j < params.n_angle; ++j) {
        const double th = 2.0 * M_PI * (j + 0.5) / params.n_angle;
        const Point2 z{x.x + params.eps * std::cos(th),
                       x.y + params.eps * std::sin(th)};
        s += -std::log(std::max(dist(z, y), params.eps));
    }
    return s / params.n_angle + harmonic;
}

/// Joint Gaussian draws with covariance [g_r^eps(x_i, x_j)]. The Cholesky
/// factor is computed once with diagonal jitter escalation
/// (1e-12 .. 1e-6 of the max diagonal).
class GffSampler {
public:
    GffSampler(const GffKernelParams& params, std::vector<Point2> grid)
        : params_(params), grid_(std::move(grid)) {
        params_.validate();
        const std::size_t n = grid_.size();
        if (n == 0) throw std::invalid_argument("GffSampler: empty grid");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (grid_[i].x == grid_[j].x && grid_[i].y == grid_[j].y)
                    throw std::invalid_argument("GffSampler: duplicate grid points");
        Eigen::MatrixXd sigma(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i; j < n; ++j) {
                const double v = circle_avg_covariance(params_, grid_[i], grid_[j]);
                sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
                sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
            }
        }
        const double max_diag = sigma.diagonal().maxCoeff();
        double jitter = 0.0;
        for (;;) {
            Eigen::LLT<Eigen::MatrixXd> llt(
                jitter == 0.0
                    ? sigma
                    : Eigen::MatrixXd(sigma + jitter * Eigen::MatrixXd::Identity(
                                                          sigma.rows(), sigma.cols())));
            if (llt.info() == Eigen::Success) {
                chol_ = llt.matrixL();
                jitter_ = jitter;
                break;
            }
            if (jitter == 0.0)
                jitter = 1e-12 * max_diag;
            else
                jitter *= 10.0;
            if (jitter > 1e-6 * max_diag)
                throw std::runtime_error("GffSampler: covariance not numerically PSD");
        }
    }

    std::size_t size() const { return grid_.size(); }
    const std::vector<Point2>& grid() const { return grid_; }
    const Eigen::MatrixXd& chol() const { return chol_; }
    double jitter() const { return jitter_; }

    /// One field draw; consumes size() normals in grid order.
    std::vector<double> draw(Rng& rng) const {
        Eigen::VectorXd g(static_cast<Eigen::Index>(size()));
        for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = rng.normal();
        Eigen::VectorXd h = chol_.triangularView<Eigen::Lower>() * g;
        return {h.data(), h.data() + h.size()};
    }

    /// `count` draws as matrix columns; identical to `count` sequential
    /// draw() calls.
    Eigen::MatrixXd draw_block(Rng& rng, std::size_t count) const {
        Eigen::MatrixXd g(static_cast<Eigen::Index>(size()),
                          static_cast<Eigen::Index>(count));
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.normal();
        return chol_.triangularView<Eigen::Lower>() * g;
    }

private:
    GffKernelParams params_;
    std::vector<Point2> grid_;
    Eigen::MatrixXd chol_;
    double jitter_ = 0.0;
};

inline std::vector<double> sample_gff_on_grid(const GffKernelParams& params,
                                              const std::vector<Point2>& grid,
                                              std::uint64_t seed) {
    GffSampler sampler(params, grid);
    Rng rng = Rng::stream(seed, 0x6f);
    return sampler.draw(rng);
}

/// Midpoints of an n x n grid on the unit box centered at the disk origin.
inline std::vector<Point2> chaos_grid(std::size_t grid_n) {
    if (grid_n < 1) throw std::invalid_argument("chaos_grid: grid_n >= 1");
    std::vector<Point2> pts;
    pts.reserve(grid_n * grid_n);
    const double h = 1.0 / static_cast<double>(grid_n);
    for (std::size_t i = 0; i < grid_n; ++i)
        for (std::size_t j = 0; j < grid_n; ++j)
            pts.push_back({-0.5 + (i + 0.5) * h, -0.5 + (j + 0.5) * h});
    return pts;
}

struct MomentTable {
    struct Entry {
        int k = 0;
        double log_moment = 0.0;
        double std_err = 0.0; // standard error of log_moment
    };
    std::vector<Entry> entries;

    void validate() const {
        if (entries.empty()) throw std::invalid_argument("MomentTable: empty");
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].k < 1)
                throw std::invalid_argument("MomentTable: k >= 1 required");
            if (i > 0 && entries[i].k <= entries[i - 1].k)
                throw std::invalid_argument("MomentTable: k must be ascending");
        }
    }
};

struct ChaosMomentResult {
    double estimate = 0.0; // E |eps^{-beta^2/2} sum e^{i beta h}|^{2k} estimate
    double std_err = 0.0;
};

/// Monte Carlo moments of the regularized chaos integral
/// eps^{-beta^2/2} * midpoint Riemann sum of e^{i beta h} over the grid,
/// orders k = 1..k_max from one pass over the draws.
inline std::vector<ChaosMomentResult> chaos_moments_raw(
    const GffKernelParams& params, double beta, int k_max, std::size_t grid_n,
    std::size_t n_draws, std::uint64_t seed) {
    if (!(beta > 0.0) || beta * beta >= 2.0)
        throw std::invalid_argument("chaos_moments: beta in (0, sqrt(2)) required");
    if (k_max < 1 || n_draws < 2)
        throw std::invalid_argument("chaos_moments: need k_max >= 1, n_draws >= 2");
    GffSampler sampler(params, chaos_grid(grid_n));
    Rng rng = Rng::stream(seed, 0x9c);
    const double cellw = 1.0 / static_cast<double>(grid_n * grid_n);
    const double pref = std::pow(params.eps, -0.5 * beta * beta);

    std::vector<double> sum(static_cast<std::size_t>(k_max), 0.0);
    std::vector<double> sumsq(static_cast<std::size_t>(k_max), 0.0);
    const std::size_t block = 128;
    std::size_t done = 0;
    while (done < n_draws) {
        const std::size_t b = std::min(block, n_draws - done);
        const Eigen::MatrixXd h = sampler.draw_block(rng, b);
        for (std::size_t d = 0; d < b; ++d) {
            double re = 0.0, im = 0.0;
            for (Eigen::Index i = 0; i < h.rows(); ++i) {
                const double ph = beta * h(i, static_cast<Eigen::Index>(d));
                re += std::cos(ph);
                im += std::sin(ph);
            }
            const double a2 = (re * re + im * im) * cellw * cellw * pref * pref;
            double p = 1.0;
            for (int k = 1; k <= k_max; ++k) {
                p *= a2; // |.|^{2k}
                sum[k - 1] += p;
                sumsq[k - 1] += p * p;
            }
        }
        done += b;
    }
    std::vector<ChaosMomentResult> out(static_cast<std::size_t>(k_max));
    const double n = static_cast<double>(n_draws);
    for (int k = 1; k <= k_max; ++k) {
        const double mean = sum[k - 1] / n;
        const double var = std::max(0.0, sumsq[k - 1] / n - mean * mean);
        out[k - 1] = {mean, std::sqrt(var / n)};
    }
    return out;
}

inline ChaosMomentResult chaos_moment(const GffKernelParams& params, double beta,
                                      int k, std::size_t grid_n,
                                      std::size_t n_draws, std::uint64_t seed) {
    const auto all = chaos_moments_raw(params, beta, k, grid_n, n_draws, seed);
    return all[static_cast<std::size_t>(k) - 1];
}

/// MomentTable of log E|.|^{2k}, k = 1..k_max.
inline MomentTable chaos_moment_table(const GffKernelParams& params, double beta,
                                      int k_max, std::size_t grid_n,
                                      std::size_t n_draws, std::uint64_t seed) {
    const auto raw = chaos_moments_raw(params, beta, k_max, grid_n, n_draws, seed);
    MomentTable table;
    for (int k = 1; k <= k_max; ++k) {
        const auto& m = raw[static_cast<std::size_t>(k) - 1];
        table.entries.push_back(
            {k, std::log(m.estimate), m.std_err / m.estimate});
    }
    table.validate();
    return table;
}

/// Finite-radius correction factor F_r evaluated in log space.
inline double finite_r_correction(const GffKernelParams& params,
                                  const std::vector<Point2>& xs,
                                  const std::vector<Point2>& ys, double beta) {
    params.validate();
    const double r = params.r;
    const double b2 = beta * beta;
    for (const auto& p : xs)
        if (norm(p) >= r)
            throw std::invalid_argument("finite_r_correction: point outside the disk");
    for (const auto& p : ys)
        if (norm(p) >= r)
            throw std::invalid_argument("finite_r_correction: point outside the disk");
    double log_f = 0.0;
    for (const auto& p : xs) log_f -= 0.5 * b2 * std::log1p(-norm2(p) / (r * r));
    for (const auto& p : ys) log_f -= 0.5 * b2 * std::log1p(-norm2(p) / (r * r));
    auto cross = [r](Point2 a, Point2 b) {
        return std::log(std::abs(1.0 - detail::cplx(a) * std::conj(detail::cplx(b)) /
                                           (r * r)));
    };
    for (const auto& a : xs)
        for (const auto& b : ys) log_f += b2 * cross(a, b);
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j)
            log_f -= b2 * cross(xs[i], xs[j]);
    for (std::size_t i = 0; i < ys.size(); ++i)
        for (std::size_t j = i + 1; j < ys.size(); ++j)
            log_f -= b2 * cross(ys[i], ys[j]);
    return std::exp(log_f);
}

/// Chebyshev tail optimization over the table:
///   log P(|X| > x) <= min_k (log E|X|^{2k} - 2k log x).
/// Returns the minimizing k and the bound; ties resolve to the smaller k.
inline std::pair<int, double> tail_bound(const MomentTable& table, double x) {
    table.validate();
    if (!(x > 0.0)) throw std::invalid_argument("tail_bound: x > 0 required");
    const double lx = std::log(x);
    int k_star = table.entries.front().k;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : table.entries) {
        const double b = e.log_moment - 2.0 * e.k * lx;
        if (b < best) {
            best = b;
            k_star = e.k;
        }
    }
    return {k_star, best};
}

} // namespace twocp

#endif
