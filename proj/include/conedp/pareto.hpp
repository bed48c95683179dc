#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "conedp/cone.hpp"
#include "conedp/types.hpp"

namespace conedp {

/// A finite sampled subset of R^p. Points closer than tau_eq are deduplicated
/// at construction so that dominance tests never compare a point against a
/// floating-point copy of itself. A PointCloud equals its own closure.
class PointCloud {
public:
    PointCloud() = default;

    PointCloud(int dim, std::vector<Vec> points, double tau_eq = tol::eq) : dim_(dim) {
        for (auto& p : points) {
            if (p.size() != dim_) throw contract_error("point dimension mismatch");
            if (!p.allFinite()) throw contract_error("point has NaN/inf entries");
        }
        std::sort(points.begin(), points.end(), lex_less);
        for (auto& p : points) {
            if (!points_.empty() && (points_.back() - p).norm() < tau_eq) continue;
            points_.push_back(std::move(p));
        }
    }

    static PointCloud single(Vec p) {
        int d = static_cast<int>(p.size());
        return PointCloud(d, {std::move(p)});
    }

    int dim() const { return dim_; }
    bool empty() const { return points_.empty(); }
    size_t size() const { return points_.size(); }
    const std::vector<Vec>& points() const { return points_; }
    const Vec& operator[](size_t i) const { return points_[i]; }

    /// Distance from y to the nearest cloud point.
    double distance(const Vec& y) const {
        if (points_.empty()) throw contract_error("distance on empty cloud");
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : points_) best = std::min(best, (y - p).norm());
        return best;
    }

    PointCloud translated(const Vec& c) const {
        std::vector<Vec> pts;
        pts.reserve(points_.size());
        for (const auto& p : points_) pts.push_back(p + c);
        return PointCloud(dim_, std::move(pts));
    }

    PointCloud scaled(double lambda) const {
        std::vector<Vec> pts;
        pts.reserve(points_.size());
        for (const auto& p : points_) pts.push_back(lambda * p);
        return PointCloud(dim_, std::move(pts));
    }

private:
    int dim_ = 0;
    std::vector<Vec> points_;
};

/// An antichain under the ordering cone: no member dominates another.
struct ParetoFront {
    std::vector<Vec> points;  // lexicographically sorted

    bool empty() const { return points.empty(); }
    size_t size() const { return points.size(); }

    PointCloud as_cloud(int dim) const { return PointCloud(dim, points); }
};

namespace detail {

/// y1 is dominated by y2 (y1 in y2 + P) with residual tolerance tau_mem;
/// points within tau_mem of each other are treated as ties, not dominations.
inline bool dominates(const OrderingCone& cone, const Vec& y2, const Vec& y1, double tau_mem) {
    Vec d = y1 - y2;
    if (d.norm() < tau_mem) return false;
    return cone.distance(d) < tau_mem;
}

}  // namespace detail

/// Minimal (generalized Pareto optimal) elements of a finite cloud: the points
/// not dominated by any other cloud point through the cone.
///
/// Two interchangeable algorithms are kept: the O(n^2) pairwise scan is the
/// reference for arbitrary cones; for the nonnegative orthant a sorted sweep
/// against the retained antichain is used. Both apply the same dominance
/// predicate and must retain the same subset.
inline ParetoFront minimal_elements(const PointCloud& cloud, const OrderingCone& cone,
                                    double tau_mem = tol::mem, bool force_reference = false) {
    if (cloud.empty()) throw contract_error("minimal_elements: empty cloud");
    if (cloud.dim() != cone.dim()) throw contract_error("minimal_elements: dimension mismatch");
    const auto& pts = cloud.points();
    ParetoFront front;

    if (cone.is_orthant() && tau_mem <= 1e-6 && !force_reference) {
        // Lexicographic order guarantees a dominator precedes its victim
        // (valid only while tau_mem stays below the data spacing), so
        // comparing against retained points only is sufficient.
        for (const auto& y : pts) {
            bool dominated = false;
            for (const auto& f : front.points)
                if (detail::dominates(cone, f, y, tau_mem)) {
                    dominated = true;
                    break;
                }
            if (!dominated) front.points.push_back(y);
        }
        return front;
    }

    for (size_t i = 0; i < pts.size(); ++i) {
        bool dominated = false;
        for (size_t j = 0; j < pts.size() && !dominated; ++j)
            if (j != i && detail::dominates(cone, pts[j], pts[i], tau_mem)) dominated = true;
        if (!dominated) front.points.push_back(pts[i]);
    }
    std::sort(front.points.begin(), front.points.end(), lex_less);
    return front;
}

/// Keeps at most one representative per eps-box of objective space, plus
/// dominance filtering at eps resolution. eps = 0 keeps the full front.
inline ParetoFront epsilon_archive(const ParetoFront& front, const OrderingCone& cone, double eps,
                                   double tau_mem = tol::mem) {
    if (eps <= 0.0 || front.points.size() <= 1) return front;
    Vec central = Vec::Zero(front.points.front().size());
    for (const auto& g : cone.unit_generators()) central += g;
    central.normalize();
    ParetoFront out;
    std::vector<Vec> boxes;
    for (const auto& y : front.points) {
        Vec box(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) box[i] = std::floor(y[i] / eps);
        bool keep = true;
        for (size_t k = 0; k < out.points.size() && keep; ++k) {
            if ((boxes[k] - box).norm() < 0.5) keep = false;  // same box
            else if (detail::dominates(cone, out.points[k] - eps * central, y, tau_mem)) keep = false;
        }
        if (keep) {
            out.points.push_back(y);
            boxes.push_back(box);
        }
    }
    return out;
}

/// External stability: every cloud point must be dominated by (or equal to)
/// some front point. Finite clouds always satisfy this.
inline bool is_externally_stable(const PointCloud& cloud, const ParetoFront& front, const OrderingCone& cone,
                                 double tau_mem = tol::mem) {
    for (const auto& s : cloud.points()) {
        bool covered = false;
        for (const auto& f : front.points) {
            if ((s - f).norm() < tau_mem || cone.distance(s - f) < tau_mem) {
                covered = true;
                break;
            }
        }
        if (!covered) return false;
    }
    return true;
}

/// Hausdorff distance between two finite nonempty clouds.
inline double hausdorff(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty()) throw contract_error("hausdorff: empty cloud");
    if (a.dim() != b.dim()) throw contract_error("hausdorff: dimension mismatch");
    double d_ab = 0.0, d_ba = 0.0;
    for (const auto& p : a.points()) d_ab = std::max(d_ab, b.distance(p));
    for (const auto& q : b.points()) d_ba = std::max(d_ba, a.distance(q));
    return std::max(d_ab, d_ba);
}

inline double hausdorff(const ParetoFront& a, const ParetoFront& b, int dim) {
    return hausdorff(PointCloud(dim, a.points), PointCloud(dim, b.points));
}

/// Sandwich lemma check: if K1 subset K2 and K2 subset K1 + P, the two fronts
/// must coincide. Returns false when either the hypotheses or the conclusion
/// fail (callers distinguish via `applicable`).
struct SandwichReport {
    bool applicable = false;  // hypotheses K1 subset K2, K2 subset K1 + P
    bool fronts_equal = false;
    bool holds() const { return applicable && fronts_equal; }
};

inline SandwichReport check_sandwich_lemma(const PointCloud& k1, const PointCloud& k2, const OrderingCone& cone,
                                           double tau_mem = tol::mem) {
    SandwichReport rep;
    if (k1.empty() || k2.empty()) return rep;
    bool subset = true;
    for (const auto& p : k1.points())
        if (k2.distance(p) > tau_mem) subset = false;
    bool dominated_cover = true;
    for (const auto& q : k2.points()) {
        bool in = false;
        for (const auto& p : k1.points())
            if ((q - p).norm() < tau_mem || cone.distance(q - p) < tau_mem) {
                in = true;
                break;
            }
        if (!in) dominated_cover = false;
    }
    rep.applicable = subset && dominated_cover;
    if (!rep.applicable) return rep;
    ParetoFront f1 = minimal_elements(k1, cone, tau_mem);
    ParetoFront f2 = minimal_elements(k2, cone, tau_mem);
    rep.fronts_equal = hausdorff(f1, f2, k1.dim()) < tau_mem;
    return rep;
}

/// Checks whether a compact cloud belongs to K(C,P): its P-front and C-front
/// coincide as sets.
inline bool in_kcp(const PointCloud& cloud, const ConePair& pair, double tau_mem = tol::mem) {
    ParetoFront fp = minimal_elements(cloud, pair.inner(), tau_mem);
    ParetoFront fc = minimal_elements(cloud, pair.outer(), tau_mem);
    if (fp.size() != fc.size()) return false;
    for (size_t i = 0; i < fp.size(); ++i)
        if ((fp.points[i] - fc.points[i]).norm() > tol::eq) return false;
    return true;
}

/// Certificate for the Hausdorff-Lipschitz bound of the minimal-element map:
/// H(E(K1), E(K2)) <= M(C,P) H(K1, K2) for clouds in K(C,P).
struct LipschitzReport {
    double h_inputs = 0.0;
    double h_fronts = 0.0;
    double bound = 0.0;  // M(C,P) * h_inputs
    double constant = 0.0;
    bool satisfied = false;
};

inline LipschitzReport lipschitz_certificate(const PointCloud& k1, const PointCloud& k2, const ConePair& pair,
                                             double tau_mem = tol::mem) {
    if (!in_kcp(k1, pair, tau_mem) || !in_kcp(k2, pair, tau_mem))
        throw contract_error("lipschitz_certificate: cloud not in K(C,P)");
    LipschitzReport rep;
    rep.constant = lipschitz_constant(pair);
    rep.h_inputs = hausdorff(k1, k2);
    ParetoFront f1 = minimal_elements(k1, pair.inner(), tau_mem);
    ParetoFront f2 = minimal_elements(k2, pair.inner(), tau_mem);
    rep.h_fronts = hausdorff(f1, f2, k1.dim());
    rep.bound = rep.constant * rep.h_inputs;
    rep.satisfied = rep.h_fronts <= rep.bound + 1e-12;
    return rep;
}

/// Antichain validation used by field import and report tooling: no front
/// point may dominate another in either direction.
inline bool is_antichain(const std::vector<Vec>& points, const OrderingCone& cone, double tau_mem = tol::mem,
                         size_t* bad_i = nullptr, size_t* bad_j = nullptr) {
    for (size_t i = 0; i < points.size(); ++i)
        for (size_t j = 0; j < points.size(); ++j) {
            if (i == j) continue;
            if (detail::dominates(cone, points[j], points[i], tau_mem)) {
                if (bad_i) *bad_i = i;
                if (bad_j) *bad_j = j;
                return false;
            }
        }
    return true;
}

}  // namespace conedp
