#ifndef TWOCP_PARTITION_HPP
#define TWOCP_PARTITION_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "twocp/energy.hpp"
#include "twocp/geometry.hpp"
#include "twocp/rng.hpp"

namespace twocp {

struct ZEstimate {
    std::size_t N = 0;
    double beta = 0.0;
    double log_Z = 0.0;
    double std_err = 0.0;
    std::size_t n_samples = 0;
    std::string method;
};

enum class ZMethod { Direct, Importance };

inline const char* z_method_name(ZMethod m) {
    return m == ZMethod::Direct ? "direct" : "importance";
}

namespace detail {

// log-space mean and delta-method standard error of exp(lw)
struct LogMeanAcc {
    double m1 = -std::numeric_limits<double>::infinity(); // log sum w
    double m2 = -std::numeric_limits<double>::infinity(); // log sum w^2
    std::size_t n = 0;

    static double lse(double a, double b) {
        if (a == -std::numeric_limits<double>::infinity()) return b;
        if (b == -std::numeric_limits<double>::infinity()) return a;
        const double hi = std::max(a, b), lo = std::min(a, b);
        return hi + std::log1p(std::exp(lo - hi));
    }
    void add(double lw) {
        m1 = lse(m1, lw);
        m2 = lse(m2, 2.0 * lw);
        ++n;
    }
    void merge(const LogMeanAcc& o) {
        m1 = lse(m1, o.m1);
        m2 = lse(m2, o.m2);
        n += o.n;
    }
    double log_mean() const { return m1 - std::log(static_cast<double>(n)); }
    // se(log Z) ~ sd(w) / (mean(w) sqrt(n))
    double log_std_err() const {
        const double nn = static_cast<double>(n);
        const double ratio = std::exp(m2 - 2.0 * m1) * nn; // mean(w^2)/mean(w)^2
        return std::sqrt(std::max(0.0, ratio - 1.0) / nn);
    }
};

// Fixed batch decomposition with per-batch RNG streams; partial sums merge
// in batch order, so the result is independent of the worker count.
constexpr std::size_t kBatchSize = 1u << 16;

template <typename BatchFn>
inline LogMeanAcc batched_accumulate(std::size_t n_samples, std::size_t n_workers,
                                     BatchFn&& fn) {
    const std::size_t n_batches = (n_samples + kBatchSize - 1) / kBatchSize;
    std::vector<LogMeanAcc> partial(n_batches);
    if (n_workers <= 1 || n_batches <= 1) {
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t count =
                std::min(kBatchSize, n_samples - b * kBatchSize);
            partial[b] = fn(b, count);
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t b = next.fetch_add(1);
                if (b >= n_batches) return;
                const std::size_t count =
                    std::min(kBatchSize, n_samples - b * kBatchSize);
                partial[b] = fn(b, count);
            }
        };
        std::vector<std::thread> pool;
        const std::size_t k = std::min(n_workers, n_batches);
        pool.reserve(k);
        for (std::size_t t = 0; t < k; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    LogMeanAcc acc;
    for (const auto& p : partial) acc.merge(p);
    return acc;
}

} // namespace detail

/// Energies of the direct estimator's uniform sample set. Exposed so the
/// common-random-numbers reweighting property is assertable: the sample set
/// depends on (N, n, seed) only, never on beta.
inline std::vector<double> direct_sample_energies(std::size_t N, std::size_t n,
                                                  std::uint64_t seed) {
    std::vector<double> ws;
    ws.reserve(n);
    Rng rng = Rng::stream(seed, 0x5a);
    std::vector<Point2> p(N), q(N);
    for (std::size_t s = 0; s < n; ++s) {
        for (auto& a : p) a = {rng.uniform01(), rng.uniform01()};
        for (auto& a : q) a = {rng.uniform01(), rng.uniform01()};
        SignedConfig c(p, q);
        ws.push_back(c.simple() ? pairwise_energy(c)
                                : std::numeric_limits<double>::infinity());
    }
    return ws;
}

/// Monte Carlo estimate of log Z_{N,beta}.
///
/// direct:     Z = E_uniform[e^{-beta/2 W}], second moment finite only for
///             2 beta < 2.
/// importance: matched-dipole proposal; Y uniform, x_i around y_i with
///             radial density prop. to s^{1-beta/2} on (0, sqrt(2)],
///             proposals outside the box carry zero weight.
inline ZEstimate estimate_log_Z(std::size_t N, double beta, std::size_t n_samples,
                                ZMethod method, std::uint64_t seed,
                                std::size_t n_workers = 1) {
    if (!(beta >= 0.0) || beta >= 2.0)
        throw std::invalid_argument("estimate_log_Z: beta must satisfy 0 <= beta < 2");
    if (N < 1 || n_samples < 1)
        throw std::invalid_argument("estimate_log_Z: need N >= 1 and n_samples >= 1");
    if (method == ZMethod::Direct && 2.0 * beta >= 2.0)
        throw std::invalid_argument(
            "estimate_log_Z: infinite-variance regime, use importance");

    ZEstimate out;
    out.N = N;
    out.beta = beta;
    out.n_samples = n_samples;
    out.method = z_method_name(method);
    if (beta == 0.0) return out; // weight identically 1, |box|^{2N} = 1

    detail::LogMeanAcc acc;
    if (method == ZMethod::Direct) {
        const auto ws = direct_sample_energies(N, n_samples, seed);
        for (double w : ws)
            acc.add(std::isfinite(w) ? -0.5 * beta * w
                                     : -std::numeric_limits<double>::infinity());
    } else {
        const double pow_exp = 2.0 - 0.5 * beta;
        const double c_norm = pow_exp / std::pow(std::sqrt(2.0), pow_exp);
        acc = detail::batched_accumulate(
            n_samples, n_workers, [&](std::size_t batch, std::size_t count) {
                detail::LogMeanAcc part;
                Rng rng = Rng::stream(seed, (batch << 8) | 0xa5);
                std::vector<Point2> xs(N), ys(N);
                std::vector<double> srad(N);
                for (std::size_t smp = 0; smp < count; ++smp) {
                    bool inside = true;
                    for (std::size_t i = 0; i < N; ++i) {
                        ys[i] = {rng.uniform01(), rng.uniform01()};
                        const double s = std::sqrt(2.0) *
                                         std::pow(rng.uniform01(), 1.0 / pow_exp);
                        const double th = 2.0 * M_PI * rng.uniform01();
                        srad[i] = s;
                        xs[i] = {ys[i].x + s * std::cos(th),
                                 ys[i].y + s * std::sin(th)};
                        if (xs[i].x < 0.0 || xs[i].x > 1.0 || xs[i].y < 0.0 ||
                            xs[i].y > 1.0)
                            inside = false;
                    }
                    if (!inside) {
                        part.add(-std::numeric_limits<double>::infinity());
                        continue;
                    }
                    SignedConfig c(xs, ys);
                    if (!c.simple()) {
                        part.add(-std::numeric_limits<double>::infinity());
                        continue;
                    }
                    double log_q = 0.0;
                    for (std::size_t i = 0; i < N; ++i)
                        log_q += std::log(c_norm) -
                                 0.5 * beta * std::log(srad[i]) -
                                 std::log(2.0 * M_PI);
                    part.add(-0.5 * beta * pairwise_energy(c) - log_q);
                }
                return part;
            });
    }
    out.log_Z = acc.log_mean();
    out.std_err = acc.log_std_err();
    return out;
}

/// Blow-up decomposition: log K_{N,beta} = log Z - (beta/2) N log N.
inline double log_K(std::size_t N, double beta, double log_Z) {
    const double n = static_cast<double>(N);
    return log_Z - 0.5 * beta * n * std::log(n);
}

/// Importance-sampled estimate of the dipole-only integral
/// int exp(-(beta/2) (sum log r(x_i) + sum log r(y_i))).
/// Radial proposal density prop. to s^{1-beta}, matching the r^{-beta}
/// singularity of a mutually-nearest pair.
inline ZEstimate estimate_dipole_integral(std::size_t N, double beta,
                                          std::size_t n_samples,
                                          std::uint64_t seed,
                                          std::size_t n_workers = 1) {
    if (!(beta >= 0.0) || beta >= 2.0)
        throw std::invalid_argument(
            "estimate_dipole_integral: beta must satisfy 0 <= beta < 2");
    if (N < 1 || n_samples < 1)
        throw std::invalid_argument(
            "estimate_dipole_integral: need N >= 1 and n_samples >= 1");
    ZEstimate out;
    out.N = N;
    out.beta = beta;
    out.n_samples = n_samples;
    out.method = "dipole-importance";
    if (beta == 0.0) return out;

    const double pow_exp = 2.0 - beta;
    const double c_norm = pow_exp / std::pow(std::sqrt(2.0), pow_exp);
    const auto acc = detail::batched_accumulate(
        n_samples, n_workers, [&](std::size_t batch, std::size_t count) {
            detail::LogMeanAcc part;
            Rng rng = Rng::stream(seed, (batch << 8) | 0xd1);
            std::vector<Point2> xs(N), ys(N);
            std::vector<double> srad(N);
            for (std::size_t smp = 0; smp < count; ++smp) {
                bool inside = true;
                for (std::size_t i = 0; i < N; ++i) {
                    ys[i] = {rng.uniform01(), rng.uniform01()};
                    const double s =
                        std::sqrt(2.0) * std::pow(rng.uniform01(), 1.0 / pow_exp);
                    const double th = 2.0 * M_PI * rng.uniform01();
                    srad[i] = s;
                    xs[i] = {ys[i].x + s * std::cos(th), ys[i].y + s * std::sin(th)};
                    if (xs[i].x < 0.0 || xs[i].x > 1.0 || xs[i].y < 0.0 ||
                        xs[i].y > 1.0)
                        inside = false;
                }
                if (!inside) {
                    part.add(-std::numeric_limits<double>::infinity());
                    continue;
                }
                SignedConfig c(xs, ys);
                if (!c.simple()) {
                    part.add(-std::numeric_limits<double>::infinity());
                    continue;
                }
                const auto nn = nn_half_distances(c);
                double log_q = 0.0;
                for (std::size_t i = 0; i < N; ++i)
                    log_q += std::log(c_norm) - beta * std::log(srad[i]) -
                             std::log(2.0 * M_PI);
                part.add(-0.5 * beta * dipole_log_sum(c, nn) - log_q);
            }
            return part;
        });
    out.log_Z = acc.log_mean();
    out.std_err = acc.log_std_err();
    return out;
}

} // namespace twocp

#endif
