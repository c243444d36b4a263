#ifndef TWOCP_DIGRAPH_HPP
#define TWOCP_DIGRAPH_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "twocp/geometry.hpp"

namespace twocp {

// ---------------------------------------------------------------------------
// Nearest-neighbor functional digraph: out-degree-1 map F(i) = nearest other
// point, ties broken by lowest index. Every component carries exactly one
// cycle and that cycle has length 2.
// ---------------------------------------------------------------------------

struct NNDigraph {
    std::vector<std::size_t> out;        // F(i)
    std::vector<std::size_t> component;  // component id per vertex, 0-based
    std::vector<std::array<std::size_t, 2>> cycles; // one per component
    std::size_t n_components() const { return cycles.size(); }
};

inline NNDigraph build_nn_digraph(const std::vector<Point2>& pts) {
    const std::size_t m = pts.size();
    if (m < 2) throw std::invalid_argument("build_nn_digraph: need at least 2 points");
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if (pts[i].x == pts[j].x && pts[i].y == pts[j].y)
                throw std::invalid_argument("build_nn_digraph: coincident points");

    NNDigraph g;
    g.out.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = m;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const double d = dist(pts[i], pts[j]);
            if (d < best) {
                best = d;
                arg = j;
            }
        }
        g.out[i] = arg;
    }

    // components by union-find over i -- F(i)
    std::vector<std::size_t> parent(m);
    for (std::size_t i = 0; i < m; ++i) parent[i] = i;
    std::vector<std::size_t>* pp = &parent;
    auto find = [pp](std::size_t a) {
        while ((*pp)[a] != a) {
            (*pp)[a] = (*pp)[(*pp)[a]];
            a = (*pp)[a];
        }
        return a;
    };
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t a = find(i), b = find(g.out[i]);
        if (a != b) parent[a] = b;
    }
    g.component.resize(m);
    std::map<std::size_t, std::size_t> remap;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t root = find(i);
        auto [it, fresh] = remap.try_emplace(root, remap.size());
        g.component[i] = it->second;
        (void)fresh;
    }

    // the unique cycle of each component: mutual nearest pairs
    g.cycles.assign(remap.size(), {m, m});
    std::vector<std::size_t> cycle_count(remap.size(), 0);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = g.out[i];
        if (i < j && g.out[j] == i) {
            const std::size_t comp = g.component[i];
            g.cycles[comp] = {i, j};
            ++cycle_count[comp];
        }
    }
    // structural guarantees: exactly one 2-cycle per component, and no
    // longer cycle can exist (walk from any vertex must land on a 2-cycle)
    for (std::size_t comp = 0; comp < cycle_count.size(); ++comp)
        if (cycle_count[comp] != 1)
            throw std::logic_error("build_nn_digraph: component without unique 2-cycle");
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t v = i;
        for (std::size_t steps = 0; steps <= m; ++steps) {
            const std::size_t w = g.out[v];
            if (g.out[w] == v) {
                v = m;
                break;
            }
            v = w;
        }
        if (v != m)
            throw std::logic_error("build_nn_digraph: walk does not reach a 2-cycle");
    }
    return g;
}

// ---------------------------------------------------------------------------
// Counting bound: |D_{M,K}| <= Gamma(M+1) M^{M-2K} / (2^K Gamma(K+1) Gamma(M-2K+1))
// ---------------------------------------------------------------------------

inline double count_bound_log(std::size_t M, std::size_t K) {
    if (M < 2 || K < 1 || 2 * K > M)
        throw std::invalid_argument("count_bound: require 1 <= K <= M/2");
    const double m = static_cast<double>(M);
    const double k = static_cast<double>(K);
    return std::lgamma(m + 1.0) + (m - 2.0 * k) * std::log(m) - k * std::log(2.0) -
           std::lgamma(k + 1.0) - std::lgamma(m - 2.0 * k + 1.0);
}

inline double count_bound(std::size_t M, std::size_t K) {
    return std::exp(count_bound_log(M, K));
}

// ---------------------------------------------------------------------------
// Exact enumeration of functional digraphs with all cycles of length 2.
// Iterates F as a mixed-radix counter with per-prefix cycle pruning; a
// prefix is cut as soon as it closes a cycle of length != 2.
// ---------------------------------------------------------------------------

namespace detail {

// the cycle through position `t`, if any, using only assigned values f[0..t]
// returns 0 if no cycle closes at t, otherwise the cycle length
inline std::size_t cycle_length_through(const std::vector<std::size_t>& f,
                                        std::size_t t) {
    std::size_t v = f[t];
    std::size_t len = 1;
    while (v <= t) {
        if (v == t) return len;
        v = f[v];
        ++len;
        if (len > f.size()) return 0; // unreachable
    }
    return 0;
}

template <typename Leaf>
inline void enumerate_rec(std::vector<std::size_t>& f, std::size_t t, Leaf&& leaf) {
    const std::size_t m = f.size();
    if (t == m) {
        leaf(f);
        return;
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (j == t) continue;
        f[t] = j;
        const std::size_t len = cycle_length_through(f, t);
        if (len != 0 && len != 2) continue;
        enumerate_rec(f, t + 1, leaf);
    }
    f[t] = m;
}

} // namespace detail

/// Exact |D_{M,K}|: labeled out-degree-1 digraphs without self-loops whose
/// every cycle has length 2, with exactly K connected components.
inline std::uint64_t enumerate_exact(std::size_t M, std::size_t K) {
    if (M < 2 || M > 10)
        throw std::invalid_argument("enumerate_exact: enumeration budget exceeded (2 <= M <= 10)");
    if (K < 1 || 2 * K > M)
        throw std::invalid_argument("enumerate_exact: require 1 <= K <= M/2");
    std::uint64_t count = 0;
    std::vector<std::size_t> f(M, M);
    detail::enumerate_rec(f, 0, [&](const std::vector<std::size_t>& g) {
        // with all cycles of length 2, components are counted by their
        // mutual pairs
        std::size_t k = 0;
        for (std::size_t i = 0; i < M; ++i)
            if (g[i] > i && g[g[i]] == i) ++k;
        if (k == K) ++count;
    });
    return count;
}

/// All-K census in one sweep: totals[K-1] = |D_{M,K}|.
inline std::vector<std::uint64_t> enumerate_census(std::size_t M) {
    if (M < 2 || M > 10)
        throw std::invalid_argument("enumerate_census: enumeration budget exceeded (2 <= M <= 10)");
    std::vector<std::uint64_t> totals(M / 2, 0);
    std::vector<std::size_t> f(M, M);
    detail::enumerate_rec(f, 0, [&](const std::vector<std::size_t>& g) {
        std::size_t k = 0;
        for (std::size_t i = 0; i < M; ++i)
            if (g[i] > i && g[g[i]] == i) ++k;
        if (k >= 1 && k <= totals.size()) ++totals[k - 1];
    });
    return totals;
}

// ---------------------------------------------------------------------------
// Per-sample digraph statistics
// ---------------------------------------------------------------------------

struct DigraphSample {
    std::size_t M = 0;
    std::size_t K = 0;
    std::size_t cycle_count = 0;
    std::map<std::size_t, std::size_t> component_size_hist; // size -> count
    double log_half_nn_sum = 0.0; // sum_i log( |S_i - S_F(i)| / 2 )
    bool any_capped = false;      // some half-distance exceeds the cap at 1
};

struct DigraphStats {
    std::vector<DigraphSample> per_sample;
    std::map<std::size_t, std::size_t> k_distribution;
};

inline DigraphStats digraph_stats(const std::vector<SignedConfig>& samples) {
    DigraphStats out;
    for (const auto& c : samples) {
        if (!c.simple())
            throw std::invalid_argument("digraph_stats: coincident points");
        DigraphSample s;
        s.M = c.total();
        if (s.M >= 2) {
            std::vector<Point2> pts(s.M);
            for (std::size_t i = 0; i < s.M; ++i) pts[i] = c.point(i);
            const auto g = build_nn_digraph(pts);
            s.K = g.n_components();
            s.cycle_count = g.cycles.size();
            std::vector<std::size_t> sizes(s.K, 0);
            for (std::size_t i = 0; i < s.M; ++i) ++sizes[g.component[i]];
            for (auto sz : sizes) ++s.component_size_hist[sz];
            for (std::size_t i = 0; i < s.M; ++i) {
                const double half = 0.5 * dist(pts[i], pts[g.out[i]]);
                s.log_half_nn_sum += std::log(half);
                if (half > 1.0) s.any_capped = true;
            }
        }
        ++out.k_distribution[s.K];
        out.per_sample.push_back(std::move(s));
    }
    return out;
}

} // namespace twocp

#endif
