// Test-only oracles, independent of the implementation paths they check:
// brute-force geometry scans, a recursive matching oracle, quadrature of
// box-pair integrals via the overlap-area reduction, the square distance
// density, and small statistics helpers.
#ifndef TWOCP_TESTS_ORACLES_HPP
#define TWOCP_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include "twocp/geometry.hpp"
#include "twocp/rng.hpp"

namespace oracles {

using twocp::Point2;
using twocp::SignedConfig;

// ---------------------------------------------------------------------------
// Config generation
// ---------------------------------------------------------------------------

inline SignedConfig random_box_config(twocp::Rng& rng, std::size_t n_pos,
                                      std::size_t n_neg) {
    std::vector<Point2> p(n_pos), n(n_neg);
    for (auto& q : p) q = {rng.uniform01(), rng.uniform01()};
    for (auto& q : n) q = {rng.uniform01(), rng.uniform01()};
    return SignedConfig(std::move(p), std::move(n));
}

// ---------------------------------------------------------------------------
// Literal transcriptions used as oracles
// ---------------------------------------------------------------------------

// r(x_i) = min(1, 1/2 min_{j!=i}|x_i-x_j|, 1/2 min_j |x_i-y_j|)
inline std::pair<std::vector<double>, std::vector<double>> nn_half_brute(
    const SignedConfig& c) {
    const auto& xs = c.pos();
    const auto& ys = c.neg();
    std::vector<double> rx(xs.size()), ry(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double m_same = std::numeric_limits<double>::infinity();
        double m_cross = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < xs.size(); ++j)
            if (j != i) m_same = std::min(m_same, twocp::dist(xs[i], xs[j]));
        for (std::size_t j = 0; j < ys.size(); ++j)
            m_cross = std::min(m_cross, twocp::dist(xs[i], ys[j]));
        rx[i] = std::min({1.0, 0.5 * m_same, 0.5 * m_cross});
    }
    for (std::size_t i = 0; i < ys.size(); ++i) {
        double m_same = std::numeric_limits<double>::infinity();
        double m_cross = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < ys.size(); ++j)
            if (j != i) m_same = std::min(m_same, twocp::dist(ys[i], ys[j]));
        for (std::size_t j = 0; j < xs.size(); ++j)
            m_cross = std::min(m_cross, twocp::dist(ys[i], xs[j]));
        ry[i] = std::min({1.0, 0.5 * m_same, 0.5 * m_cross});
    }
    return {rx, ry};
}

// Delete-and-recurse matching oracle on the full distance matrix.
inline void gs_recurse(const std::vector<Point2>& xs, const std::vector<Point2>& ys,
                       std::vector<std::size_t> xi, std::vector<std::size_t> yi,
                       std::vector<std::size_t>& sigma) {
    if (xi.empty()) return;
    double best = std::numeric_limits<double>::infinity();
    std::size_t a = 0, b = 0;
    for (std::size_t i : xi)
        for (std::size_t j : yi) {
            const double d = twocp::dist(xs[i], ys[j]);
            if (d < best) {
                best = d;
                a = i;
                b = j;
            }
        }
    sigma[a] = b;
    xi.erase(std::find(xi.begin(), xi.end(), a));
    yi.erase(std::find(yi.begin(), yi.end(), b));
    gs_recurse(xs, ys, std::move(xi), std::move(yi), sigma);
}

inline std::vector<std::size_t> gale_shapley_oracle(const std::vector<Point2>& xs,
                                                    const std::vector<Point2>& ys) {
    std::vector<std::size_t> xi(xs.size()), yi(ys.size()), sigma(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xi[i] = i;
    for (std::size_t j = 0; j < ys.size(); ++j) yi[j] = j;
    gs_recurse(xs, ys, xi, yi, sigma);
    return sigma;
}

// ---------------------------------------------------------------------------
// 1D adaptive Simpson
// ---------------------------------------------------------------------------

inline double simpson_rec(const std::function<double(double)>& f, double a,
                          double b, double fa, double fm, double fb, double whole,
                          double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-10, int depth = 40) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

// ---------------------------------------------------------------------------
// Box-pair integrals via the overlap reduction:
//   int_{B x B} f(x-y) g(x,y) dx dy = int_{[-1,1]^2} S(u) |u|^{-alpha} du
// with S smooth (an overlap-area factor, possibly times an inner integral).
// The quadrature refines dyadically toward u = 0 and closes the origin
// corner cells with the exact |u|^{-alpha} mass.
// ---------------------------------------------------------------------------

// int_{[0,1]^2} |u|^{-alpha} du
inline double corner_mass_unit(double alpha) {
    if (alpha >= 2.0) throw std::invalid_argument("corner_mass: alpha must be < 2");
    return 2.0 / (2.0 - alpha) *
           adaptive_simpson([alpha](double t) { return std::pow(std::cos(t), alpha - 2.0); },
                            0.0, M_PI / 4.0, 1e-13);
}

struct Singular2D {
    // S: smooth factor; alpha: |u|^{-alpha} singularity at the origin
    std::function<double(Point2)> S;
    double alpha = 0.0;
    double tol = 1e-9;

    double gauss3(Point2 c, double h) const {
        static const double x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
        static const double w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        double s = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const Point2 u{c.x + h * x[i], c.y + h * x[j]};
                s += w[i] * w[j] * std::pow(twocp::norm(u), -alpha) * S(u);
            }
        return s * h * h;
    }

    double smooth_cell(Point2 c, double h, double tol_cell, int depth) const {
        const double whole = gauss3(c, h);
        const double h2 = 0.5 * h;
        double parts = 0.0;
        for (int sx = -1; sx <= 1; sx += 2)
            for (int sy = -1; sy <= 1; sy += 2)
                parts += gauss3({c.x + sx * h2, c.y + sy * h2}, h2);
        if (depth <= 0 || std::abs(parts - whole) < tol_cell) return parts;
        double s = 0.0;
        for (int sx = -1; sx <= 1; sx += 2)
            for (int sy = -1; sy <= 1; sy += 2)
                s += smooth_cell({c.x + sx * h2, c.y + sy * h2}, h2, tol_cell * 0.25,
                                 depth - 1);
        return s;
    }

    // cell of half-width h whose corner nearest the origin IS the origin
    double corner_cell(Point2 c, double h, int depth) const {
        if (depth <= 0 || 2.0 * h < 1e-8) {
            const double mass = corner_mass_unit(alpha) * std::pow(2.0 * h, 2.0 - alpha);
            return S(c) * mass;
        }
        const double h2 = 0.5 * h;
        // the quadrant of this cell touching the origin stays singular
        const Point2 toward{c.x > 0 ? -1.0 : 1.0, c.y > 0 ? -1.0 : 1.0};
        double s = 0.0;
        for (int sx = -1; sx <= 1; sx += 2)
            for (int sy = -1; sy <= 1; sy += 2) {
                const Point2 cc{c.x + sx * h2, c.y + sy * h2};
                const bool singular = (sx == static_cast<int>(toward.x)) &&
                                      (sy == static_cast<int>(toward.y));
                if (singular)
                    s += corner_cell(cc, h2, depth - 1);
                else
                    s += smooth_cell(cc, h2, tol * 0.01, 24);
            }
        return s;
    }

    // integrate over [-1,1]^2
    double run() const {
        double s = 0.0;
        const double h = 0.5;
        for (int sx = -1; sx <= 1; sx += 2)
            for (int sy = -1; sy <= 1; sy += 2)
                s += corner_cell({sx * h, sy * h}, h, 60);
        return s;
    }
};

inline double tent(Point2 u) {
    const double a = 1.0 - std::abs(u.x);
    const double b = 1.0 - std::abs(u.y);
    return (a > 0.0 && b > 0.0) ? a * b : 0.0;
}

// int_{box^2} |x-y|^{-alpha} dx dy over the unit box
inline double box_pair_power_integral(double alpha, double tol = 1e-9) {
    Singular2D q;
    q.S = [](Point2 u) { return tent(u); };
    q.alpha = alpha;
    q.tol = tol;
    return q.run();
}

// int_{box^2} w(|x-y|) dx dy for smooth-away-from-0 w with w ~ |u|^{-alpha}
inline double box_pair_kernel_integral(const std::function<double(double)>& w,
                                       double alpha, double tol = 1e-9) {
    Singular2D q;
    q.S = [w, alpha](Point2 u) {
        const double s = twocp::norm(u);
        const double t = tent(u);
        if (t == 0.0) return 0.0;
        return w(s) * std::pow(s, alpha) * t; // smooth residual
    };
    q.alpha = alpha;
    q.tol = tol;
    return q.run();
}

// ---------------------------------------------------------------------------
// Finite-radius chaos factor, direct linear-space transcription (independent
// of the log-space implementation), and the k=1 moment integral
//   int_{D^2} |x-y|^{-beta^2} F_r(x,y) dx dy,  D = unit box centered at 0,
// via the overlap reduction with an inner 8x8 Gauss panel.
// ---------------------------------------------------------------------------

inline double finite_r_linear(const std::vector<Point2>& xs,
                              const std::vector<Point2>& ys, double beta,
                              double r) {
    const double b2 = beta * beta;
    auto c = [](Point2 p) { return std::complex<double>(p.x, p.y); };
    double head = 1.0;
    for (const auto& p : xs) head *= std::pow(1.0 - (p.x * p.x + p.y * p.y) / (r * r), -b2 / 2.0);
    for (const auto& p : ys) head *= std::pow(1.0 - (p.x * p.x + p.y * p.y) / (r * r), -b2 / 2.0);
    double num = 1.0, den = 1.0;
    for (const auto& a : xs)
        for (const auto& b : ys) num *= std::abs(1.0 - c(a) * std::conj(c(b)) / (r * r));
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j)
            den *= std::abs(1.0 - c(xs[i]) * std::conj(c(xs[j])) / (r * r));
    for (std::size_t i = 0; i < ys.size(); ++i)
        for (std::size_t j = i + 1; j < ys.size(); ++j)
            den *= std::abs(1.0 - c(ys[i]) * std::conj(c(ys[j])) / (r * r));
    return head * std::pow(num / den, b2);
}

inline double gmc_k1_moment_oracle(double beta, double r, double tol = 1e-7) {
    const double b2 = beta * beta;
    static const double gx8[8] = {-0.9602898564975363, -0.7966664774136267,
                                  -0.5255324099163290, -0.1834346424956498,
                                  0.1834346424956498,  0.5255324099163290,
                                  0.7966664774136267,  0.9602898564975363};
    static const double gw8[8] = {0.1012285362903763, 0.2223810344533745,
                                  0.3137066458778873, 0.3626837833783620,
                                  0.3626837833783620, 0.3137066458778873,
                                  0.2223810344533745, 0.1012285362903763};
    Singular2D q;
    q.alpha = b2;
    q.tol = tol;
    q.S = [beta, r](Point2 u) {
        // Phi(u) = int over D cap (D+u) of F_r(x, x-u) dx
        const double x0 = std::max(-0.5, -0.5 + u.x), x1 = std::min(0.5, 0.5 + u.x);
        const double y0 = std::max(-0.5, -0.5 + u.y), y1 = std::min(0.5, 0.5 + u.y);
        if (x0 >= x1 || y0 >= y1) return 0.0;
        const double cx = 0.5 * (x0 + x1), hx = 0.5 * (x1 - x0);
        const double cy = 0.5 * (y0 + y1), hy = 0.5 * (y1 - y0);
        double s = 0.0;
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                const Point2 x{cx + hx * gx8[i], cy + hy * gx8[j]};
                const Point2 y{x.x - u.x, x.y - u.y};
                s += gw8[i] * gw8[j] * finite_r_linear({x}, {y}, beta, r);
            }
        return s * hx * hy;
    };
    return q.run();
}

// ---------------------------------------------------------------------------
// Distance density of two uniform points in the unit square:
//   f(s) = 4 s int_0^{pi/2} (1 - s cos t)_+ (1 - s sin t)_+ dt
// ---------------------------------------------------------------------------

inline double square_distance_density(double s) {
    if (s <= 0.0 || s >= std::sqrt(2.0)) return 0.0;
    const auto f = [s](double t) {
        const double a = 1.0 - s * std::cos(t);
        const double b = 1.0 - s * std::sin(t);
        return (a > 0.0 && b > 0.0) ? a * b : 0.0;
    };
    return 4.0 * s * adaptive_simpson(f, 0.0, M_PI / 2.0, 1e-12);
}

// Bin masses of the separation s under target density prop. to s^{-gamma} f(s).
inline std::vector<double> separation_bin_masses(double gamma,
                                                 const std::vector<double>& edges) {
    std::vector<double> m(edges.size() - 1);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        m[i] = adaptive_simpson(
            [gamma](double s) {
                return std::pow(s, -gamma) * square_distance_density(s);
            },
            std::max(edges[i], 1e-12), edges[i + 1], 1e-11);
    }
    double tot = 0.0;
    for (double v : m) tot += v;
    for (double& v : m) v /= tot;
    return m;
}

// ---------------------------------------------------------------------------
// Statistics helpers
// ---------------------------------------------------------------------------

// regularized incomplete gamma Q(a,x) (upper), series + continued fraction
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q");
    if (x == 0.0) return 1.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

// chi^2 p-value for observed counts vs expected probabilities
inline double chi2_pvalue(const std::vector<std::size_t>& counts,
                          const std::vector<double>& probs) {
    double n = 0.0;
    for (auto c : counts) n += static_cast<double>(c);
    double stat = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double e = n * probs[i];
        const double d = static_cast<double>(counts[i]) - e;
        stat += d * d / e;
    }
    const double dof = static_cast<double>(counts.size()) - 1.0;
    return gamma_q(0.5 * dof, 0.5 * stat);
}

// one-sample Kolmogorov-Smirnov p-value against a cdf
inline double ks_pvalue(std::vector<double> xs,
                        const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    const double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int j = 1; j <= 100; ++j)
        p += 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lam * lam);
    return std::clamp(p, 0.0, 1.0);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x,
                             const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ssr += r * r;
    }
    f.r2 = (syy > 0.0) ? 1.0 - ssr / syy : 1.0;
    return f;
}

// through-origin fit y = c x, R^2 against the mean
inline LineFit least_squares_origin(const std::vector<double>& x,
                                    const std::vector<double>& y) {
    double sxx = 0.0, sxy = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        my += y[i];
    }
    my /= static_cast<double>(y.size());
    LineFit f;
    f.slope = sxy / sxx;
    double ssr = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.slope * x[i];
        ssr += r * r;
        syy += (y[i] - my) * (y[i] - my);
    }
    f.r2 = (syy > 0.0) ? 1.0 - ssr / syy : 1.0;
    return f;
}

} // namespace oracles

#endif
