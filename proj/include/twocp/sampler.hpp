#ifndef TWOCP_SAMPLER_HPP
#define TWOCP_SAMPLER_HPP

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "twocp/energy.hpp"
#include "twocp/geometry.hpp"
#include "twocp/rng.hpp"

namespace twocp {

enum class MoveKind { Displace = 0, DipoleTranslate = 1, Resample = 2 };

struct SimParams {
    std::size_t N = 1;
    double beta = 1.0;              // stability range: beta < 2
    double proposal_scale = 0.0;    // 0 = default 0.25 / sqrt(N)
    std::array<double, 3> move_mix = {0.6, 0.3, 0.1};
    std::uint64_t seed = 1;
    std::size_t burn_in = 0;
    std::size_t thin = 1;
    std::size_t resync_interval = 1u << 20;

    void validate() const {
        if (N < 1) throw std::invalid_argument("SimParams: N >= 1 required");
        if (!(beta > 0.0) || beta >= 2.0)
            throw std::invalid_argument("SimParams: beta < 2 required (and beta > 0)");
        const double s = move_mix[0] + move_mix[1] + move_mix[2];
        if (std::abs(s - 1.0) > 1e-12)
            throw std::invalid_argument("SimParams: move_mix must sum to 1");
        for (double w : move_mix)
            if (w < 0.0) throw std::invalid_argument("SimParams: negative move weight");
        if (proposal_scale < 0.0)
            throw std::invalid_argument("SimParams: negative proposal scale");
        if (thin < 1) throw std::invalid_argument("SimParams: thin >= 1 required");
    }
    double scale() const {
        return proposal_scale > 0.0
                   ? proposal_scale
                   : 0.25 / std::sqrt(static_cast<double>(N));
    }
};

struct ChainState {
    SignedConfig config;
    double energy = 0.0; // cached W_N
    Rng rng;
    std::array<std::uint64_t, 3> proposed{};
    std::array<std::uint64_t, 3> accepted{};
    std::uint64_t steps = 0;
};

/// Metropolis rule for symmetric proposals.
inline double acceptance_probability(double beta, double delta_w) {
    return std::min(1.0, std::exp(-0.5 * beta * delta_w));
}

inline bool in_box(Point2 p) {
    return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0;
}

/// 2N points i.i.d. uniform on the box (coincident draws rejected), energy
/// cached. Deterministic in params.seed.
inline ChainState init_chain(const SimParams& params) {
    params.validate();
    ChainState st;
    st.rng = Rng::stream(params.seed, 0xc0);
    for (;;) {
        std::vector<Point2> p(params.N), n(params.N);
        for (auto& a : p) a = {st.rng.uniform01(), st.rng.uniform01()};
        for (auto& a : n) a = {st.rng.uniform01(), st.rng.uniform01()};
        SignedConfig c(std::move(p), std::move(n));
        if (!c.simple()) continue; // measure-zero, but keep the state simple
        st.config = std::move(c);
        break;
    }
    st.energy = pairwise_energy(st.config);
    return st;
}

namespace detail {

// W(after) - W(before) for a rigid +/- pair translation, O(N)
inline double pair_delta(const SignedConfig& c, std::size_t ip, std::size_t in,
                         Point2 delta) {
    const Point2 a = c.pos()[ip], a2 = a + delta;
    const Point2 b = c.neg()[in], b2 = b + delta;
    double d = 0.0;
    for (std::size_t k = 0; k < c.n_pos(); ++k) {
        if (k == ip) continue;
        const Point2 p = c.pos()[k];
        d += 2.0 * (std::log(dist(a, p)) - std::log(dist(a2, p))); // repulsion
        d += std::log(dist(p, b2)) - std::log(dist(p, b));         // attraction
    }
    for (std::size_t l = 0; l < c.n_neg(); ++l) {
        if (l == in) continue;
        const Point2 q = c.neg()[l];
        d += 2.0 * (std::log(dist(b, q)) - std::log(dist(b2, q)));
        d += std::log(dist(a2, q)) - std::log(dist(a, q));
    }
    d += std::log(dist(a2, b2)) - std::log(dist(a, b)); // exactly 0 up to rounding
    return d;
}

inline std::size_t nearest_neg(const SignedConfig& c, std::size_t ip) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < c.n_neg(); ++j) {
        const double d = dist(c.pos()[ip], c.neg()[j]);
        if (d < best) {
            best = d;
            arg = j;
        }
    }
    return arg;
}

// nearest negative to pos[ip] after the pair (ip, in) moves rigidly by delta,
// evaluated without mutating the configuration
inline std::size_t nearest_neg_after_pair_move(const SignedConfig& c,
                                               std::size_t ip, std::size_t in,
                                               Point2 delta) {
    const Point2 a2 = c.pos()[ip] + delta;
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < c.n_neg(); ++j) {
        const Point2 q = (j == in) ? c.neg()[j] + delta : c.neg()[j];
        const double d = dist(a2, q);
        if (d < best) {
            best = d;
            arg = j;
        }
    }
    return arg;
}

} // namespace detail

/// One Metropolis step: proposal per move_mix, accepted with probability
/// min(1, e^{-(beta/2) dW}); proposals leaving the box or colliding are
/// rejected (zero target density).
inline void metropolis_step(ChainState& st, const SimParams& params) {
    const double u = st.rng.uniform01();
    MoveKind kind = MoveKind::Displace;
    if (u >= params.move_mix[0]) {
        kind = (u < params.move_mix[0] + params.move_mix[1]) ? MoveKind::DipoleTranslate
                                                             : MoveKind::Resample;
    }
    ++st.steps;
    ++st.proposed[static_cast<int>(kind)];
    auto accept = [&](double dw) {
        return dw <= 0.0 || st.rng.uniform01() < std::exp(-0.5 * params.beta * dw);
    };

    switch (kind) {
        case MoveKind::Displace: {
            const std::size_t i = st.rng.below(2 * params.N);
            const int sign = i < params.N ? +1 : -1;
            const std::size_t idx = i % params.N;
            const Point2 old =
                (sign > 0) ? st.config.pos()[idx] : st.config.neg()[idx];
            const double s = params.scale();
            const Point2 to{old.x + s * st.rng.normal(), old.y + s * st.rng.normal()};
            if (!in_box(to)) return;
            double dw;
            try {
                dw = energy_delta(st.config, PointMove{sign, idx, to});
            } catch (const std::invalid_argument&) {
                return; // exact coincidence: reject
            }
            if (!accept(dw)) return;
            if (!st.config.try_move_point(sign, idx, to)) return;
            st.energy += dw;
            ++st.accepted[static_cast<int>(kind)];
            break;
        }
        case MoveKind::DipoleTranslate: {
            const std::size_t ip = st.rng.below(params.N);
            const std::size_t in = detail::nearest_neg(st.config, ip);
            const double s = params.scale();
            const Point2 delta{s * st.rng.normal(), s * st.rng.normal()};
            const Point2 a2 = st.config.pos()[ip] + delta;
            const Point2 b2 = st.config.neg()[in] + delta;
            if (!in_box(a2) || !in_box(b2)) return;
            // reversibility: the reverse proposal must select the same pair
            if (detail::nearest_neg_after_pair_move(st.config, ip, in, delta) != in)
                return;
            const double dw = detail::pair_delta(st.config, ip, in, delta);
            if (!accept(dw)) return;
            if (!st.config.try_move_pair(ip, in, delta)) return;
            st.energy += dw;
            ++st.accepted[static_cast<int>(kind)];
            break;
        }
        case MoveKind::Resample: {
            const std::size_t i = st.rng.below(2 * params.N);
            const int sign = i < params.N ? +1 : -1;
            const std::size_t idx = i % params.N;
            const Point2 to{st.rng.uniform01(), st.rng.uniform01()};
            double dw;
            try {
                dw = energy_delta(st.config, PointMove{sign, idx, to});
            } catch (const std::invalid_argument&) {
                return;
            }
            if (!accept(dw)) return;
            if (!st.config.try_move_point(sign, idx, to)) return;
            st.energy += dw;
            ++st.accepted[static_cast<int>(kind)];
            break;
        }
    }
    if (st.steps % params.resync_interval == 0)
        st.energy = pairwise_energy(st.config);
}

/// Effective sample size from the initial-positive-sequence estimator.
inline double effective_sample_size(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    if (n < 4) return static_cast<double>(n);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    if (var == 0.0) return static_cast<double>(n);
    auto rho = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i)
            s += (xs[i] - mean) * (xs[i + lag] - mean);
        return s / (static_cast<double>(n) * var);
    };
    double tau = 1.0;
    for (std::size_t lag = 1; lag + 1 < n / 2; lag += 2) {
        const double pair = rho(lag) + rho(lag + 1);
        if (pair <= 0.0) break;
        tau += 2.0 * pair;
    }
    return static_cast<double>(n) / tau;
}

using Observer = std::function<double(const ChainState&)>;

struct RunResult {
    std::vector<double> energy_trace;               // W_N at every kept sample
    std::vector<std::vector<double>> observer_traces;
    std::array<std::uint64_t, 3> proposed{};
    std::array<std::uint64_t, 3> accepted{};
    double ess_energy = 0.0;
    ChainState final_state;
};

/// Discard burn_in steps, then record every thin-th state.
inline RunResult run_chain(const SimParams& params, std::size_t n_samples,
                           const std::vector<Observer>& observers = {}) {
    params.validate();
    RunResult out;
    ChainState st = init_chain(params);
    for (std::size_t i = 0; i < params.burn_in; ++i) metropolis_step(st, params);
    out.observer_traces.resize(observers.size());
    out.energy_trace.reserve(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (std::size_t t = 0; t < params.thin; ++t) metropolis_step(st, params);
        out.energy_trace.push_back(st.energy);
        for (std::size_t o = 0; o < observers.size(); ++o)
            out.observer_traces[o].push_back(observers[o](st));
    }
    out.proposed = st.proposed;
    out.accepted = st.accepted;
    out.ess_energy = effective_sample_size(out.energy_trace);
    out.final_state = std::move(st);
    return out;
}

/// Independent chains with per-chain derived seeds, run on up to `workers`
/// threads and collected in chain-index order; results do not depend on the
/// worker count.
inline std::vector<RunResult> run_chains(const SimParams& base,
                                         std::size_t n_chains,
                                         std::size_t n_samples,
                                         const std::vector<Observer>& observers = {},
                                         std::size_t workers = 1) {
    base.validate();
    if (n_chains < 1)
        throw std::invalid_argument("run_chains: n_chains >= 1 required");
    std::vector<RunResult> results(n_chains);
    auto run_one = [&](std::size_t i) {
        SimParams p = base;
        p.seed = base.seed ^ (0xA0761D6478BD642Full * (i + 1));
        results[i] = run_chain(p, n_samples, observers);
    };
    if (workers <= 1 || n_chains == 1) {
        for (std::size_t i = 0; i < n_chains; ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_chains) return;
                run_one(i);
            }
        };
        std::vector<std::thread> pool;
        const std::size_t k = std::min(workers, n_chains);
        pool.reserve(k);
        for (std::size_t t = 0; t < k; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

} // namespace twocp

#endif
