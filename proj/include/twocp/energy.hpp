#ifndef TWOCP_ENERGY_HPP
#define TWOCP_ENERGY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "twocp/geometry.hpp"
#include "twocp/io.hpp"

namespace twocp {

// ---------------------------------------------------------------------------
// Pairwise interaction energy.
//
// Convention: same-sign pairs enter as ordered pairs (each unordered pair
// twice), opposite-sign pairs enter once:
//   W = sum_{i != j} (-log|x_i-x_j| - log|y_i-y_j|) + sum_{i,j} log|x_i-y_j|.
// The smeared-field energy (1/2pi) int |grad V|^2 counts *every* unordered
// pair twice, so the field route below subtracts one copy of the
// opposite-sign log sum to land in this convention.
// ---------------------------------------------------------------------------

inline void require_simple_neutral(const SignedConfig& c, const char* who) {
    if (!c.simple())
        throw std::invalid_argument(std::string(who) + ": coincident points");
    if (!c.neutral())
        throw std::invalid_argument(std::string(who) + ": non-neutral configuration");
}

/// Opposite-sign log sum  sum_{i,j} log|x_i - y_j|  (each pair once).
inline double cross_log_sum(const SignedConfig& c) {
    double s = 0.0;
    for (const auto& a : c.pos())
        for (const auto& b : c.neg()) s += std::log(dist(a, b));
    return s;
}

inline double pairwise_energy(const SignedConfig& c) {
    require_simple_neutral(c, "pairwise_energy");
    const auto& xs = c.pos();
    const auto& ys = c.neg();
    double same = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j)
            same -= std::log(dist(xs[i], xs[j]));
    for (std::size_t i = 0; i < ys.size(); ++i)
        for (std::size_t j = i + 1; j < ys.size(); ++j)
            same -= std::log(dist(ys[i], ys[j]));
    return 2.0 * same + cross_log_sum(c);
}

/// Single-point displacement, identified by sign class and index.
struct PointMove {
    int sign = +1; // +1 moves pos()[index], -1 moves neg()[index]
    std::size_t index = 0;
    Point2 to{};
};

/// W(after) - W(before) using only terms involving the moved point. O(N).
inline double energy_delta(const SignedConfig& c, const PointMove& mv) {
    require_simple_neutral(c, "energy_delta");
    const auto& same = (mv.sign > 0) ? c.pos() : c.neg();
    const auto& other = (mv.sign > 0) ? c.neg() : c.pos();
    if (mv.index >= same.size())
        throw std::invalid_argument("energy_delta: index out of range");
    const Point2 a = same[mv.index];
    const Point2 b = mv.to;
    if (b.x == a.x && b.y == a.y) return 0.0;
    for (std::size_t j = 0; j < same.size(); ++j)
        if (j != mv.index && same[j].x == b.x && same[j].y == b.y)
            throw std::invalid_argument("energy_delta: move creates coincidence");
    for (const auto& q : other)
        if (q.x == b.x && q.y == b.y)
            throw std::invalid_argument("energy_delta: move creates coincidence");
    double d = 0.0;
    for (std::size_t j = 0; j < same.size(); ++j) {
        if (j == mv.index) continue;
        d += 2.0 * (std::log(dist(a, same[j])) - std::log(dist(b, same[j])));
    }
    for (const auto& q : other) d += std::log(dist(b, q)) - std::log(dist(a, q));
    return d;
}

// ---------------------------------------------------------------------------
// Smeared potential and truncated electric field.
// ---------------------------------------------------------------------------

/// V_{N,r}(x): potential of the ring-smeared charges. Constant inside each
/// smearing disk, exact point potential outside.
inline double smeared_potential_at(const SignedConfig& c, const NNDistances& nn,
                                   Point2 x) {
    if (nn.r_pos.size() != c.n_pos() || nn.r_neg.size() != c.n_neg())
        throw std::invalid_argument("smeared_potential_at: nn/config mismatch");
    double v = 0.0;
    for (std::size_t i = 0; i < c.n_pos(); ++i) {
        const Point2 u = x - c.pos()[i];
        v += -std::log(std::max(norm(u), nn.r_pos[i]));
    }
    for (std::size_t i = 0; i < c.n_neg(); ++i) {
        const Point2 u = x - c.neg()[i];
        v += std::log(std::max(norm(u), nn.r_neg[i]));
    }
    return v;
}

/// grad V_{N,r}(x): each charge contributes -q (x-p)/|x-p|^2 outside its
/// smearing disk and zero inside.
inline Point2 truncated_field_at(const SignedConfig& c, const NNDistances& nn,
                                 Point2 x) {
    if (nn.r_pos.size() != c.n_pos() || nn.r_neg.size() != c.n_neg())
        throw std::invalid_argument("truncated_field_at: nn/config mismatch");
    Point2 e{0.0, 0.0};
    auto add = [&e, &x](Point2 p, double r, double q) {
        const Point2 u = x - p;
        const double rr = norm2(u);
        if (rr < r * r || rr == 0.0) return;
        e.x -= q * u.x / rr;
        e.y -= q * u.y / rr;
    };
    for (std::size_t i = 0; i < c.n_pos(); ++i) add(c.pos()[i], nn.r_pos[i], +1.0);
    for (std::size_t i = 0; i < c.n_neg(); ++i) add(c.neg()[i], nn.r_neg[i], -1.0);
    return e;
}

// ---------------------------------------------------------------------------
// Adaptive quadrature of the field energy.
// ---------------------------------------------------------------------------

struct QuadratureBudget {
    double target_rel = 1e-3;   // refine until bound <= target_rel*max(1,|scale|)
    double target_abs = 0.0;    // absolute bound target; 0 = derive from target_rel
    std::size_t max_cells = 1u << 20;
    double halfwidth = 0.0;     // integration square half-width; 0 = adaptive,
                                // at least 2*(diam+1)
};

struct FieldQuadResult {
    double estimate = 0.0;      // raw integral minus the opposite-sign log sum
    double error_bound = 0.0;   // refinement bound + far-field tail bound
    double raw_integral = 0.0;  // quadrature estimate of (1/2pi) int |grad V|^2
    double tail_bound = 0.0;
    std::size_t cells = 0;
};

namespace detail {

struct Charge {
    Point2 p;
    double r;
    double q;
};

// area of the disk D(0,r) below the horizontal line v = y and left of u = x
inline double disk_corner_area(double x, double y, double r) {
    if (x <= -r || y <= -r) return 0.0;
    auto phi = [r](double u) {
        return 0.5 * (u * std::sqrt(std::max(0.0, r * r - u * u)) +
                      r * r * std::asin(std::clamp(u / r, -1.0, 1.0)));
    };
    const double xc = std::clamp(x, -r, r);
    if (y >= r) return 2.0 * (phi(xc) - phi(-r));
    const double s = std::sqrt(std::max(0.0, r * r - y * y));
    if (y >= 0.0) {
        double w = 2.0 * (phi(std::min(xc, -s)) - phi(-r));
        if (xc > -s) {
            const double b = std::min(xc, s);
            w += (phi(b) - phi(-s)) + y * (b + s);
        }
        if (xc > s) w += 2.0 * (phi(xc) - phi(s));
        return w;
    }
    if (xc <= -s) return 0.0;
    const double b = std::min(xc, s);
    return (phi(b) - phi(-s)) + y * (b + s);
}

/// Area of D(p, r) intersected with the axis-aligned square of center m and
/// half-width h.
inline double circle_box_area(Point2 p, double r, Point2 m, double h) {
    const double x0 = m.x - h - p.x, x1 = m.x + h - p.x;
    const double y0 = m.y - h - p.y, y1 = m.y + h - p.y;
    return disk_corner_area(x1, y1, r) - disk_corner_area(x0, y1, r) -
           disk_corner_area(x1, y0, r) + disk_corner_area(x0, y0, r);
}

inline double integrand(const std::vector<Charge>& ch, Point2 z) {
    Point2 e{0.0, 0.0};
    for (const auto& k : ch) {
        const Point2 u = z - k.p;
        const double rr = norm2(u);
        if (rr < k.r * k.r || rr == 0.0) continue;
        e.x -= k.q * u.x / rr;
        e.y -= k.q * u.y / rr;
    }
    return norm2(e) / (2.0 * M_PI);
}

struct CellEval {
    double contrib; // four-sub-midpoint estimate of the cell integral
    double err;     // error estimate / bound for this cell
    double sub[4];  // sub-midpoint integrand values, reused by children
};

// Cells with no truncation circle through them get a safety-factored
// two-level refinement estimate (midpoint vs four sub-midpoints). A cell
// crossed by exactly one circle is split geometrically: the exact in/out
// areas weight per-region sample means, with per-region oscillation bounds.
// Cells crossed by several circles keep the crude sup(g)*area bound.
inline CellEval eval_cell(const std::vector<Charge>& ch, Point2 m, double h,
                          double f_mid) {
    const double delta = h * std::sqrt(2.0); // half-diagonal
    double sup_other = 0.0, lip_other = 0.0;
    int crossing_idx = -1;
    int n_crossing = 0;
    for (std::size_t j = 0; j < ch.size(); ++j) {
        const auto& k = ch[j];
        const double d = dist(m, k.p);
        const double dmin = std::max(0.0, d - delta);
        const double dmax = d + delta;
        if (dmax <= k.r) continue; // fully inside: zero contribution
        if (dmin < k.r) {
            ++n_crossing;
            crossing_idx = static_cast<int>(j);
        } else {
            sup_other += 1.0 / dmin;
            lip_other += 1.0 / (dmin * dmin);
        }
    }
    const double area = 4.0 * h * h;
    const double inv2pi = 1.0 / (2.0 * M_PI);
    CellEval out;
    const double h2 = 0.5 * h;
    Point2 subp[4];
    {
        int i = 0;
        for (int sx = -1; sx <= 1; sx += 2)
            for (int sy = -1; sy <= 1; sy += 2) {
                subp[i] = {m.x + sx * h2, m.y + sy * h2};
                out.sub[i] = integrand(ch, subp[i]);
                ++i;
            }
    }
    const double s2 = out.sub[0] + out.sub[1] + out.sub[2] + out.sub[3];
    if (n_crossing == 0) {
        out.contrib = s2 * 0.25 * area;
        // midpoint error shrinks ~4x per split; the two-level difference
        // over 3 estimates the fine-level error
        const double safety = 3.0;
        out.err = safety * std::abs(f_mid * area - out.contrib) / 3.0;
        return out;
    }
    if (n_crossing == 1) {
        const auto& k = ch[static_cast<std::size_t>(crossing_idx)];
        const double a_in = std::clamp(circle_box_area(k.p, k.r, m, h), 0.0, area);
        const double a_out = area - a_in;
        double sum_in = 0.0, sum_out = 0.0;
        int cnt_in = 0, cnt_out = 0;
        for (int i = 0; i < 4; ++i) {
            if (dist(subp[i], k.p) >= k.r) {
                sum_out += out.sub[i];
                ++cnt_out;
            } else {
                sum_in += out.sub[i];
                ++cnt_in;
            }
        }
        const double sup_in = sup_other;
        const double sup_out = sup_other + 1.0 / k.r;
        const double lip_in = lip_other;
        const double lip_out = lip_other + 1.0 / (k.r * k.r);
        const double supg_in = sup_in * sup_in * inv2pi;
        const double supg_out = sup_out * sup_out * inv2pi;
        // oscillation via gradient x in-region path length; the outside of a
        // disk needs the geodesic detour factor pi/2
        const double osc_in =
            std::min(2.0 * sup_in * lip_in * inv2pi * 2.0 * delta, supg_in);
        const double osc_out = std::min(
            2.0 * sup_out * lip_out * inv2pi * M_PI * delta, supg_out);
        out.contrib = 0.0;
        out.err = 0.0;
        if (cnt_in > 0) {
            out.contrib += a_in * sum_in / cnt_in;
            out.err += a_in * osc_in;
        } else {
            out.contrib += a_in * s2 * 0.25;
            out.err += a_in * supg_in;
        }
        if (cnt_out > 0) {
            out.contrib += a_out * sum_out / cnt_out;
            out.err += a_out * osc_out;
        } else {
            out.contrib += a_out * s2 * 0.25;
            out.err += a_out * supg_out;
        }
        return out;
    }
    // several circles through one cell: crude but safe
    double sup_e = sup_other;
    for (std::size_t j = 0; j < ch.size(); ++j) {
        const auto& k = ch[j];
        const double d = dist(m, k.p);
        const double dmin = std::max(0.0, d - delta);
        if (d + delta > k.r && dmin < k.r) sup_e += 1.0 / k.r;
    }
    out.contrib = s2 * 0.25 * area;
    out.err = sup_e * sup_e * inv2pi * area;
    return out;
}

} // namespace detail

/// Rigorous far-field bound: outside the square of half-width L about c0 the
/// field is the exact point field of a neutral system, and
/// |E(z)| <= S/(|z-c0|-rho)^2 with S = sum_i |x_i-y_i|, rho = max|p-c0|.
inline double field_tail_bound(const SignedConfig& c, Point2 c0, double L) {
    if (c.total() == 0) return 0.0;
    double S = 0.0, rho = 0.0;
    const auto sigma = gale_shapley_match(c.pos(), c.neg());
    for (std::size_t i = 0; i < c.n_pos(); ++i)
        S += dist(c.pos()[i], c.neg()[sigma[i]]);
    for (std::size_t i = 0; i < c.total(); ++i)
        rho = std::max(rho, dist(c.point(i), c0));
    // validity needs the square to contain every smearing disk (radius <= 1)
    if (L <= rho + 1.0) return std::numeric_limits<double>::infinity();
    const double t = L - rho;
    return S * S * (0.5 / (t * t) + rho / (3.0 * t * t * t));
}

inline FieldQuadResult field_energy_quadrature(const SignedConfig& c,
                                               const QuadratureBudget& budget = {}) {
    require_simple_neutral(c, "field_energy_quadrature");
    FieldQuadResult out;
    if (c.total() == 0) return out;

    const NNDistances nn = nn_half_distances(c);
    std::vector<detail::Charge> ch;
    ch.reserve(c.total());
    for (std::size_t i = 0; i < c.n_pos(); ++i)
        ch.push_back({c.pos()[i], nn.r_pos[i], +1.0});
    for (std::size_t i = 0; i < c.n_neg(); ++i)
        ch.push_back({c.neg()[i], nn.r_neg[i], -1.0});

    double xlo = ch[0].p.x, xhi = xlo, ylo = ch[0].p.y, yhi = ylo;
    double diam = 0.0;
    for (const auto& a : ch) {
        xlo = std::min(xlo, a.p.x);
        xhi = std::max(xhi, a.p.x);
        ylo = std::min(ylo, a.p.y);
        yhi = std::max(yhi, a.p.y);
        for (const auto& b : ch) diam = std::max(diam, dist(a.p, b.p));
    }
    const Point2 c0{0.5 * (xlo + xhi), 0.5 * (ylo + yhi)};
    double L = budget.halfwidth;
    const double target_guess =
        budget.target_abs > 0.0 ? budget.target_abs : budget.target_rel;
    if (L <= 0.0) {
        // grow the square until the analytic tail fits in a quarter of the
        // target: tail ~ S^2/(2 t^2)
        double S = 0.0, rho = 0.0;
        const auto sigma = gale_shapley_match(c.pos(), c.neg());
        for (std::size_t i = 0; i < c.n_pos(); ++i)
            S += dist(c.pos()[i], c.neg()[sigma[i]]);
        for (std::size_t i = 0; i < c.total(); ++i)
            rho = std::max(rho, dist(c.point(i), c0));
        L = std::max(2.0 * (diam + 1.0),
                     rho + 1.0 + S / std::sqrt(0.5 * target_guess));
    }
    out.tail_bound = field_tail_bound(c, c0, L);

    struct Node {
        Point2 m;
        double h;
        double contrib;
        double err;
        double sub[4];
    };
    std::vector<Node> nodes;
    nodes.reserve(1024);
    // max-heap of (err, node index); index tie-break keeps the refinement
    // order deterministic
    using QE = std::pair<double, std::size_t>;
    std::priority_queue<QE> heap;
    std::vector<char> is_leaf;

    auto push_node = [&](Point2 m, double h, double f_mid) {
        const auto ev = detail::eval_cell(ch, m, h, f_mid);
        nodes.push_back({m, h, ev.contrib, ev.err,
                         {ev.sub[0], ev.sub[1], ev.sub[2], ev.sub[3]}});
        is_leaf.push_back(1);
        heap.emplace(ev.err, nodes.size() - 1);
    };
    push_node(c0, L, detail::integrand(ch, c0));

    double total_err = nodes[0].err;
    double total_sum = nodes[0].contrib;
    std::size_t n_leaves = 1;
    const double min_h = L * std::pow(2.0, -42);

    auto near_target = [&]() {
        const double t = budget.target_abs > 0.0
                             ? budget.target_abs
                             : budget.target_rel * std::max(1.0, std::abs(total_sum));
        // the tail term is fixed; do not grind the near field below a
        // quarter of the target
        return std::max(t - out.tail_bound, 0.25 * t);
    };
    while (n_leaves + 3 <= budget.max_cells && total_err > near_target() &&
           !heap.empty()) {
        const auto [b, idx] = heap.top();
        heap.pop();
        if (!is_leaf[idx]) continue;
        if (b <= 0.0) break;
        if (nodes[idx].h * 0.5 < min_h) break;
        is_leaf[idx] = 0;
        const Node nd = nodes[idx];
        total_err -= nd.err;
        total_sum -= nd.contrib;
        const double h2 = 0.5 * nd.h;
        int i = 0;
        for (int sx = -1; sx <= 1; sx += 2)
            for (int sy = -1; sy <= 1; sy += 2) {
                // child midpoint was this cell's sub-midpoint
                push_node({nd.m.x + sx * h2, nd.m.y + sy * h2}, h2, nd.sub[i]);
                total_err += nodes.back().err;
                total_sum += nodes.back().contrib;
                ++i;
            }
        n_leaves += 3;
    }

    // Deterministic reduction: re-sum leaves in creation order.
    double raw = 0.0, bound = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!is_leaf[i]) continue;
        raw += nodes[i].contrib;
        bound += nodes[i].err;
    }
    out.raw_integral = raw;
    out.error_bound = bound + out.tail_bound;
    out.cells = n_leaves;

    double cross = 0.0;
    for (const auto& a : c.pos())
        for (const auto& b : c.neg()) cross += std::log(dist(a, b));
    out.estimate = raw - cross;
    return out;
}

// ---------------------------------------------------------------------------
// Energy identity check.
// ---------------------------------------------------------------------------

struct EnergyBreakdown {
    double pairwise = 0.0;
    double field_quad = 0.0;
    double dipole_sum = 0.0;
    double residual = 0.0;
    double quad_error_bound = 0.0;
};

inline double dipole_log_sum(const SignedConfig& c, const NNDistances& nn) {
    if (nn.r_pos.size() != c.n_pos() || nn.r_neg.size() != c.n_neg())
        throw std::invalid_argument("dipole_log_sum: nn/config mismatch");
    double s = 0.0;
    for (double r : nn.r_pos) s += std::log(r);
    for (double r : nn.r_neg) s += std::log(r);
    return s;
}

inline EnergyBreakdown energy_identity_check(const SignedConfig& c,
                                             QuadratureBudget budget = {}) {
    require_simple_neutral(c, "energy_identity_check");
    EnergyBreakdown out;
    out.pairwise = pairwise_energy(c);
    if (c.total() == 0) return out;
    const NNDistances nn = nn_half_distances(c);
    out.dipole_sum = dipole_log_sum(c, nn);
    if (budget.target_abs <= 0.0)
        budget.target_abs = budget.target_rel * std::max(1.0, std::abs(out.pairwise));
    const auto q = field_energy_quadrature(c, budget);
    out.field_quad = q.estimate;
    out.quad_error_bound = q.error_bound;
    out.residual = out.pairwise - out.field_quad - out.dipole_sum;
    return out;
}

inline std::string energy_breakdown_json(const EnergyBreakdown& b) {
    std::string s = "{";
    s += "\"pairwise\":" + format_double(b.pairwise);
    s += ",\"field_quad\":" + format_double(b.field_quad);
    s += ",\"dipole_sum\":" + format_double(b.dipole_sum);
    s += ",\"residual\":" + format_double(b.residual);
    s += ",\"quad_error_bound\":" + format_double(b.quad_error_bound);
    s += "}";
    return s;
}

// ---------------------------------------------------------------------------
// Continuum energy H(mu+, mu-) on a common grid.
// ---------------------------------------------------------------------------

/// Nonnegative grid function on the unit box, n x n cells of side cell_size,
/// x-major storage.
struct GridDensity {
    std::size_t n = 0;
    double cell_size = 0.0;
    std::vector<double> values; // size n*n

    GridDensity() = default;
    GridDensity(std::size_t n_, std::vector<double> v)
        : n(n_), cell_size(1.0 / static_cast<double>(n_)), values(std::move(v)) {
        if (values.size() != n * n)
            throw std::invalid_argument("GridDensity: size mismatch");
        for (double x : values)
            if (!(x >= 0.0) || !std::isfinite(x))
                throw std::invalid_argument("GridDensity: negative or non-finite value");
    }
    double mass() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * cell_size * cell_size;
    }
};

/// Exact average of log|z - center| over a square cell of side a.
inline double log_kernel_cell_average(double a) {
    return std::log(a) - 0.5 * std::log(2.0) + M_PI / 4.0 - 1.5;
}

/// H(mu+, mu-) = -2pi int int log|x-y| d(mu+ - mu-)(x) d(mu+ - mu-)(y),
/// double midpoint rule, self-cell handled by the exact cell average.
inline double continuum_energy(const GridDensity& mp, const GridDensity& mm) {
    if (mp.n != mm.n || mp.cell_size != mm.cell_size)
        throw std::invalid_argument("continuum_energy: grid mismatch");
    const std::size_t n = mp.n;
    const double a = mp.cell_size;
    const double area = a * a;
    std::vector<double> w(n * n);
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = (mp.values[i] - mm.values[i]) * area;
    const double kdiag = log_kernel_cell_average(a);
    double h = 0.0;
    for (std::size_t i = 0; i < n * n; ++i) {
        if (w[i] == 0.0) continue;
        const double xi = (static_cast<double>(i / n) + 0.5) * a;
        const double yi = (static_cast<double>(i % n) + 0.5) * a;
        double row = 0.0;
        for (std::size_t j = 0; j < n * n; ++j) {
            if (w[j] == 0.0) continue;
            if (i == j) {
                row += w[j] * kdiag;
                continue;
            }
            const double xj = (static_cast<double>(j / n) + 0.5) * a;
            const double yj = (static_cast<double>(j % n) + 0.5) * a;
            row += w[j] * std::log(std::hypot(xi - xj, yi - yj));
        }
        h += w[i] * row;
    }
    return -2.0 * M_PI * h;
}

} // namespace twocp

#endif
