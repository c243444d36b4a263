#ifndef TWOCP_GEOMETRY_HPP
#define TWOCP_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace twocp {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Point2 a) { return a.x * a.x + a.y * a.y; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double dist(Point2 a, Point2 b) { return norm(a - b); }

/// Signed planar configuration: positive charges in `pos`, negative in `neg`.
/// Construction checks coordinate finiteness (throws) and point distinctness.
/// A configuration with coincident points is constructible but flagged
/// (`simple() == false`); operations that need distinct points reject it.
class SignedConfig {
public:
    SignedConfig() = default;
    SignedConfig(std::vector<Point2> pos, std::vector<Point2> neg)
        : pos_(std::move(pos)), neg_(std::move(neg)) {
        for (const auto& p : pos_) check_finite(p);
        for (const auto& p : neg_) check_finite(p);
        simple_ = compute_simple();
    }

    const std::vector<Point2>& pos() const { return pos_; }
    const std::vector<Point2>& neg() const { return neg_; }
    std::size_t n_pos() const { return pos_.size(); }
    std::size_t n_neg() const { return neg_.size(); }
    std::size_t total() const { return pos_.size() + neg_.size(); }
    bool neutral() const { return pos_.size() == neg_.size(); }
    bool simple() const { return simple_; }

    // Merged sign-forgetting view: positives first, then negatives.
    Point2 point(std::size_t i) const {
        return i < pos_.size() ? pos_[i] : neg_[i - pos_.size()];
    }
    int sign(std::size_t i) const { return i < pos_.size() ? +1 : -1; }

    // In-place single-point update for samplers. Returns false (and leaves
    // the configuration unchanged) if the target coincides with another
    // point. Only valid on simple configurations.
    bool try_move_point(int sign, std::size_t index, Point2 to) {
        check_finite(to);
        auto& own = (sign > 0) ? pos_ : neg_;
        if (index >= own.size())
            throw std::out_of_range("SignedConfig::try_move_point: bad index");
        const std::size_t skip = (sign > 0) ? index : pos_.size() + index;
        for (std::size_t i = 0; i < total(); ++i) {
            if (i == skip) continue;
            const Point2 p = point(i);
            if (p.x == to.x && p.y == to.y) return false;
        }
        own[index] = to;
        return true;
    }

    // Rigid update of a +/- pair by a common displacement; all-or-nothing.
    bool try_move_pair(std::size_t ipos, std::size_t ineg, Point2 delta) {
        if (ipos >= pos_.size() || ineg >= neg_.size())
            throw std::out_of_range("SignedConfig::try_move_pair: bad index");
        const Point2 a = pos_[ipos] + delta;
        const Point2 b = neg_[ineg] + delta;
        check_finite(a);
        check_finite(b);
        if (a.x == b.x && a.y == b.y) return false;
        for (std::size_t i = 0; i < total(); ++i) {
            if (i == ipos || i == pos_.size() + ineg) continue;
            const Point2 p = point(i);
            if ((p.x == a.x && p.y == a.y) || (p.x == b.x && p.y == b.y))
                return false;
        }
        pos_[ipos] = a;
        neg_[ineg] = b;
        return true;
    }

private:
    static void check_finite(const Point2& p) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw std::invalid_argument("SignedConfig: non-finite coordinate");
    }
    bool compute_simple() const {
        const std::size_t m = total();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) {
                const Point2 a = point(i), b = point(j);
                if (a.x == b.x && a.y == b.y) return false;
            }
        return true;
    }

    std::vector<Point2> pos_;
    std::vector<Point2> neg_;
    bool simple_ = true;
};

/// Nearest-neighbor half-distances, capped at 1, one entry per point.
struct NNDistances {
    std::vector<double> r_pos;
    std::vector<double> r_neg;
};

/// r(p) = min(1, half the distance from p to the closest other point of
/// either sign). Requires a simple configuration with at least two points.
inline NNDistances nn_half_distances(const SignedConfig& c) {
    if (!c.simple())
        throw std::invalid_argument("nn_half_distances: degenerate configuration");
    const std::size_t m = c.total();
    if (m < 2)
        throw std::invalid_argument("nn_half_distances: need at least 2 points");
    NNDistances out;
    out.r_pos.resize(c.n_pos());
    out.r_neg.resize(c.n_neg());
    for (std::size_t i = 0; i < m; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            best = std::min(best, dist(c.point(i), c.point(j)));
        }
        const double r = std::min(1.0, 0.5 * best);
        if (i < c.n_pos())
            out.r_pos[i] = r;
        else
            out.r_neg[i - c.n_pos()] = r;
    }
    return out;
}

/// Truncated logarithmic kernel (log(eta) - log|x|)_+ ; vanishes outside the
/// disk of radius eta. eta may equal 1 (the half-distance cap). |x| = 0 maps
/// to +infinity.
inline double truncation_kernel(double eta, Point2 x) {
    if (!(eta > 0.0) || eta > 1.0)
        throw std::invalid_argument("truncation_kernel: eta must be in (0,1]");
    const double a = norm(x);
    if (a == 0.0) return std::numeric_limits<double>::infinity();
    if (a >= eta) return 0.0;
    return std::log(eta) - std::log(a);
}

/// Matching by repeatedly pairing the closest surviving (x_i, y_j) and
/// deleting it. sigma[i] = j. Ties broken by lexicographically smallest
/// (i, j). Both lists must have the same nonzero length.
inline std::vector<std::size_t> gale_shapley_match(const std::vector<Point2>& xs,
                                                   const std::vector<Point2>& ys) {
    if (xs.size() != ys.size())
        throw std::invalid_argument("gale_shapley_match: length mismatch");
    const std::size_t k = xs.size();
    if (k == 0)
        throw std::invalid_argument("gale_shapley_match: empty point sets");
    std::vector<std::size_t> sigma(k, k);
    std::vector<bool> xdone(k, false), ydone(k, false);
    for (std::size_t round = 0; round < k; ++round) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = k, bj = k;
        for (std::size_t i = 0; i < k; ++i) {
            if (xdone[i]) continue;
            for (std::size_t j = 0; j < k; ++j) {
                if (ydone[j]) continue;
                const double d = dist(xs[i], ys[j]);
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        sigma[bi] = bj;
        xdone[bi] = true;
        ydone[bj] = true;
    }
    return sigma;
}

/// Blow-up coordinates: every coordinate multiplied by sqrt(N).
inline SignedConfig rescale_blowup(const SignedConfig& c, std::size_t N) {
    const double s = std::sqrt(static_cast<double>(N));
    std::vector<Point2> p = c.pos(), n = c.neg();
    for (auto& q : p) q = s * q;
    for (auto& q : n) q = s * q;
    return SignedConfig(std::move(p), std::move(n));
}

// ---------------------------------------------------------------------------
// CSV serialization: rows "sign,x,y" with sign in {+1,-1}; header required.
// ---------------------------------------------------------------------------

std::string format_double(double v); // defined in io.hpp

inline void write_config_csv(std::ostream& os, const SignedConfig& c) {
    os << "sign,x,y\n";
    for (const auto& p : c.pos())
        os << "1," << format_double(p.x) << ',' << format_double(p.y) << '\n';
    for (const auto& p : c.neg())
        os << "-1," << format_double(p.x) << ',' << format_double(p.y) << '\n';
}

inline SignedConfig read_config_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error("config csv: empty input");
    // strip BOM / trailing CR
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    {
        std::string h = line;
        h.erase(std::remove_if(h.begin(), h.end(),
                               [](unsigned char ch) { return ch == ' '; }),
                h.end());
        if (h != "sign,x,y")
            throw std::runtime_error("config csv: missing 'sign,x,y' header");
    }
    std::vector<Point2> pos, neg;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string sign_s, x_s, y_s, extra;
        if (!std::getline(ss, sign_s, ',') || !std::getline(ss, x_s, ',') ||
            !std::getline(ss, y_s, ',') || std::getline(ss, extra))
            throw std::runtime_error("config csv: malformed row at line " +
                                     std::to_string(lineno));
        const int sign = std::stoi(sign_s);
        const Point2 p{std::stod(x_s), std::stod(y_s)};
        if (sign == 1)
            pos.push_back(p);
        else if (sign == -1)
            neg.push_back(p);
        else
            throw std::runtime_error("config csv: sign must be +1 or -1 at line " +
                                     std::to_string(lineno));
    }
    return SignedConfig(std::move(pos), std::move(neg));
}

} // namespace twocp

#endif
