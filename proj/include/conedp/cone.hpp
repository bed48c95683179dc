#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>

#include "conedp/types.hpp"

namespace conedp {

/// A finitely generated pointed convex cone in R^p containing the origin.
///
/// The cone is the set of nonnegative combinations of its generators
/// (V-representation). Pointedness is validated at construction: for no
/// generator g may -g also belong to the cone. For solid cones (generators
/// span R^p) an H-representation is derived as well: exact inward facet
/// normals in dimension <= 3, sampled support directions above.
class OrderingCone {
public:
    OrderingCone(int dim, std::vector<Vec> generators) : dim_(dim), gens_(std::move(generators)) {
        if (dim_ < 1) throw contract_error("cone dimension must be >= 1");
        if (gens_.empty()) throw contract_error("cone needs at least one generator");
        for (auto& g : gens_) {
            if (g.size() != dim_) throw contract_error("generator dimension mismatch");
            if (!g.allFinite()) throw contract_error("generator has NaN/inf entries");
            if (g.norm() <= 1e-14) throw contract_error("zero generator");
        }
        gen_matrix_.resize(dim_, static_cast<Eigen::Index>(gens_.size()));
        unit_gens_.reserve(gens_.size());
        for (size_t j = 0; j < gens_.size(); ++j) {
            gen_matrix_.col(static_cast<Eigen::Index>(j)) = gens_[j];
            unit_gens_.push_back(gens_[j].normalized());
        }
        orthant_ = detect_orthant();
        solid_ = (Eigen::ColPivHouseholderQR<Mat>(gen_matrix_).rank() == dim_);
        // Pointedness: a cone has a line iff -g lies in it for some generator g.
        for (const auto& g : unit_gens_) {
            if (distance_impl(-g) < 1e-9)
                throw contract_error("cone is not pointed: generator and its negation both contained");
        }
        if (solid_) facet_normals_ = compute_facet_normals();
    }

    int dim() const { return dim_; }
    const std::vector<Vec>& generators() const { return gens_; }
    const std::vector<Vec>& unit_generators() const { return unit_gens_; }
    bool solid() const { return solid_; }
    bool is_orthant() const { return orthant_; }

    /// Unit inward facet normals of the H-representation (solid cones only).
    const std::vector<Vec>& facet_normals() const {
        require_solid("facet_normals");
        return facet_normals_;
    }

    /// Euclidean distance from v to the cone.
    double distance(const Vec& v) const {
        check_dim(v);
        return distance_impl(v);
    }

    /// Membership with residual tolerance tau.
    bool contains(const Vec& v, double tau = tol::mem) const { return distance(v) < tau; }

    /// True iff the closed ball B(v, margin) is contained in the cone.
    /// Requires a solid cone; with unit inward facet normals n_i this is
    /// exactly min_i <n_i, v> >= margin (in dimension <= 3; sampled above).
    bool interior_contains(const Vec& v, double margin = tol::interior) const {
        check_dim(v);
        require_solid("interior_contains");
        return facet_margin(v) > margin;
    }

    /// min_i <n_i, v> over unit inward facet normals; positive iff v is
    /// interior, and equals dist(v, boundary) measured facet-wise.
    double facet_margin(const Vec& v) const {
        check_dim(v);
        require_solid("facet_margin");
        double m = std::numeric_limits<double>::infinity();
        for (const auto& n : facet_normals_) m = std::min(m, n.dot(v));
        return m;
    }

    /// Nearest point d_l of P_l = { x : B(x,l) subset of P } to the origin.
    /// P_l is represented as { <n_i, x> >= l } over unit facet normals.
    Vec deep_point(double l) const {
        require_solid("deep_point");
        if (!(l > 0.0)) throw contract_error("deep_point: l must be > 0");
        const auto& N = facet_normals_;
        if (N.size() <= 14) {
            std::optional<Vec> best = deep_point_active_set(l);
            if (!best) throw numeric_error("deep_point: no feasible active set found");
            return *best;
        }
        return deep_point_dykstra(l);
    }

    /// mu(P) = ||d_1||; always > 1 for a pointed solid cone.
    double mu() const { return deep_point(1.0).norm(); }

    /// The reflected cone -P (used by minimality checks with respect to -P).
    OrderingCone negated() const {
        std::vector<Vec> gens;
        gens.reserve(gens_.size());
        for (const auto& g : gens_) gens.push_back(-g);
        return OrderingCone(dim_, std::move(gens));
    }

private:
    void check_dim(const Vec& v) const {
        if (v.size() != dim_) throw contract_error("vector dimension mismatch");
    }
    void require_solid(const char* op) const {
        if (!solid_) throw contract_error(std::string(op) + ": cone is not solid (generators do not span R^p)");
    }

    bool detect_orthant() const {
        std::vector<bool> axis_seen(static_cast<size_t>(dim_), false);
        for (const auto& g : unit_gens_) {
            int axis = -1;
            for (Eigen::Index i = 0; i < dim_; ++i) {
                if (std::abs(g[i] - 1.0) < 1e-14) {
                    if (axis >= 0) return false;
                    axis = static_cast<int>(i);
                } else if (std::abs(g[i]) > 1e-14) {
                    return false;
                }
            }
            if (axis < 0) return false;
            axis_seen[static_cast<size_t>(axis)] = true;
        }
        return std::all_of(axis_seen.begin(), axis_seen.end(), [](bool b) { return b; });
    }

    double distance_impl(const Vec& v) const {
        if (orthant_) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < v.size(); ++i) s += std::min(v[i], 0.0) * std::min(v[i], 0.0);
            return std::sqrt(s);
        }
        if (dim_ == 2) return distance_2d(v);
        return nnls_residual(gen_matrix_, v);
    }

    // Exact projection distance in the plane: candidates are the apex and the
    // two extreme rays.
    double distance_2d(const Vec& v) const {
        auto [a, b] = extreme_pair_2d();
        double best = v.norm();
        for (const Vec& ray : {unit_gens_[a], unit_gens_[b]}) {
            double t = std::max(0.0, ray.dot(v));
            best = std::min(best, (v - t * ray).norm());
        }
        // Interior test: v between the extreme rays.
        const Vec& ga = unit_gens_[a];
        const Vec& gb = unit_gens_[b];
        double cross_ab = ga[0] * gb[1] - ga[1] * gb[0];
        double cross_av = ga[0] * v[1] - ga[1] * v[0];
        double cross_vb = v[0] * gb[1] - v[1] * gb[0];
        if (std::abs(cross_ab) < 1e-14) {
            // Single-ray cone: handled by the ray projection above.
            return best;
        }
        if (cross_ab > 0 ? (cross_av >= 0 && cross_vb >= 0) : (cross_av <= 0 && cross_vb <= 0)) return 0.0;
        return best;
    }

    std::pair<size_t, size_t> extreme_pair_2d() const {
        size_t ia = 0, ib = 0;
        double min_dot = 2.0;
        for (size_t i = 0; i < unit_gens_.size(); ++i)
            for (size_t j = i; j < unit_gens_.size(); ++j) {
                double d = unit_gens_[i].dot(unit_gens_[j]);
                if (d < min_dot) {
                    min_dot = d;
                    ia = i;
                    ib = j;
                }
            }
        return {ia, ib};
    }

    std::vector<Vec> compute_facet_normals() const {
        std::vector<Vec> normals;
        auto push_unique = [&](Vec n) {
            n.normalize();
            for (const auto& m : normals)
                if ((m - n).norm() < 1e-9) return;
            normals.push_back(std::move(n));
        };
        if (dim_ == 1) {
            push_unique(unit_gens_[0]);
            return normals;
        }
        if (dim_ == 2) {
            auto [a, b] = extreme_pair_2d();
            const Vec& ga = unit_gens_[a];
            const Vec& gb = unit_gens_[b];
            Vec pa = make_vec({-ga[1], ga[0]});
            Vec pb = make_vec({-gb[1], gb[0]});
            push_unique(pa.dot(gb) >= 0 ? pa : Vec(-pa));
            push_unique(pb.dot(ga) >= 0 ? pb : Vec(-pb));
            return normals;
        }
        if (dim_ == 3) {
            for (size_t i = 0; i < unit_gens_.size(); ++i)
                for (size_t j = i + 1; j < unit_gens_.size(); ++j) {
                    Eigen::Vector3d a = unit_gens_[i], b = unit_gens_[j];
                    Eigen::Vector3d c = a.cross(b);
                    if (c.norm() < 1e-12) continue;
                    for (double s : {1.0, -1.0}) {
                        Vec n = s * c.normalized();
                        bool supports = true;
                        for (const auto& g : unit_gens_)
                            if (n.dot(g) < -1e-12) supports = false;
                        if (supports) push_unique(n);
                    }
                }
            if (normals.empty()) throw numeric_error("no facet normals found for 3D cone");
            return normals;
        }
        // dim >= 4: sampled support directions. Axis candidates keep orthants
        // exact; random polar samples cover the rest.
        std::mt19937_64 rng(0x5eedc0de5eedc0deULL);
        std::normal_distribution<double> gauss(0.0, 1.0);
        auto try_dir = [&](const Vec& n) {
            for (const auto& g : unit_gens_)
                if (n.dot(g) < -1e-12) return;
            push_unique(n);
        };
        for (Eigen::Index i = 0; i < dim_; ++i) {
            Vec e = Vec::Zero(dim_);
            e[i] = 1.0;
            try_dir(e);
            try_dir(-e);
        }
        for (int k = 0; k < 4096; ++k) {
            Vec n(dim_);
            for (Eigen::Index i = 0; i < dim_; ++i) n[i] = gauss(rng);
            n.normalize();
            try_dir(n);
        }
        if (normals.empty()) throw numeric_error("no support directions found for cone");
        return normals;
    }

    std::optional<Vec> deep_point_active_set(double l) const {
        const auto& N = facet_normals_;
        const size_t m = N.size();
        std::optional<Vec> best;
        double best_norm = std::numeric_limits<double>::infinity();
        std::vector<size_t> subset;
        auto feasible = [&](const Vec& x) {
            for (const auto& n : N)
                if (n.dot(x) < l * (1.0 - 1e-12) - 1e-12) return false;
            return true;
        };
        // The projection of the origin onto {<n_i,x> >= l} lies on the affine
        // hull of an independent active subset of size <= p; enumerate them.
        auto consider = [&]() {
            const Eigen::Index k = static_cast<Eigen::Index>(subset.size());
            Mat A(k, dim_);
            for (Eigen::Index r = 0; r < k; ++r) A.row(r) = N[subset[static_cast<size_t>(r)]].transpose();
            Mat AAT = A * A.transpose();
            Eigen::FullPivLU<Mat> lu(AAT);
            if (lu.rank() < k) return;
            Vec x = A.transpose() * lu.solve(Vec::Constant(k, l));
            if (feasible(x) && x.norm() < best_norm) {
                best_norm = x.norm();
                best = x;
            }
        };
        std::function<void(size_t)> rec = [&](size_t start) {
            if (!subset.empty()) consider();
            if (subset.size() == static_cast<size_t>(dim_)) return;
            for (size_t i = start; i < m; ++i) {
                subset.push_back(i);
                rec(i + 1);
                subset.pop_back();
            }
        };
        rec(0);
        return best;
    }

    Vec deep_point_dykstra(double l) const {
        const auto& N = facet_normals_;
        Vec x = Vec::Zero(dim_);
        std::vector<Vec> corr(N.size(), Vec::Zero(dim_));
        for (int sweep = 0; sweep < 200000; ++sweep) {
            double shift = 0.0;
            for (size_t i = 0; i < N.size(); ++i) {
                Vec y = x + corr[i];
                double viol = l - N[i].dot(y);
                Vec xn = (viol > 0.0) ? Vec(y + viol * N[i]) : y;
                corr[i] = y - xn;
                shift += (xn - x).norm();
                x = xn;
            }
            if (shift < 1e-13) break;
        }
        return x;
    }

    int dim_;
    std::vector<Vec> gens_;
    std::vector<Vec> unit_gens_;
    Mat gen_matrix_;
    std::vector<Vec> facet_normals_;
    bool solid_ = false;
    bool orthant_ = false;
};

inline OrderingCone orthant_cone(int dim) {
    std::vector<Vec> gens;
    for (int i = 0; i < dim; ++i) {
        Vec e = Vec::Zero(dim);
        e[i] = 1.0;
        gens.push_back(e);
    }
    return OrderingCone(dim, std::move(gens));
}

/// A pair (P, C) of ordering cones with P \ {0} contained in int(C), the
/// setting under which the minimal-element map is Hausdorff-Lipschitz.
class ConePair {
public:
    ConePair(OrderingCone inner, OrderingCone outer, double margin = tol::interior)
        : inner_(std::move(inner)), outer_(std::move(outer)) {
        if (inner_.dim() != outer_.dim()) throw contract_error("cone pair dimension mismatch");
        if (!outer_.solid()) throw contract_error("outer cone C must have nonempty interior");
        for (const auto& g : inner_.unit_generators()) {
            if (!outer_.interior_contains(g, margin))
                throw contract_error("cone pair invariant violated: generator of P not interior to C");
        }
    }

    const OrderingCone& inner() const { return inner_; }
    const OrderingCone& outer() const { return outer_; }

private:
    OrderingCone inner_;
    OrderingCone outer_;
};

/// alpha(C,P) = inf ||x - y|| over unit vectors x of P and y outside int(C).
/// For H-represented C the distance from x to the complement of int(C) is
/// exactly min_i <n_i, x>+, and over the unit sphere of P the infimum is
/// attained at a unit generator; the sphere samples are a cross-check with
/// O(1/n_sphere) slack.
inline double alpha(const ConePair& pair, int n_sphere = 10000, uint64_t seed = 17) {
    const auto& P = pair.inner();
    const auto& C = pair.outer();
    auto dist_to_non_interior = [&](const Vec& x) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& n : C.facet_normals()) m = std::min(m, std::max(n.dot(x), 0.0));
        return m;
    };
    double a = std::numeric_limits<double>::infinity();
    for (const auto& g : P.unit_generators()) a = std::min(a, dist_to_non_interior(g));
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expd(1.0);
    const auto& gens = P.unit_generators();
    for (int k = 0; k < n_sphere; ++k) {
        Vec x = Vec::Zero(P.dim());
        for (const auto& g : gens) x += expd(rng) * g;
        double nrm = x.norm();
        if (nrm < 1e-14) continue;
        a = std::min(a, dist_to_non_interior(x / nrm));
    }
    return a;
}

/// alpha'(C,P) = 1 + 1/alpha(C,P) > 1.
inline double alpha_prime(const ConePair& pair, int n_sphere = 10000) {
    return 1.0 + 1.0 / alpha(pair, n_sphere);
}

/// M(C,P) = (1 + alpha') mu(C) + alpha', the Hausdorff-Lipschitz constant of
/// the minimal-element map on K(C,P).
inline double lipschitz_constant(const ConePair& pair, int n_sphere = 10000) {
    double ap = alpha_prime(pair, n_sphere);
    return (1.0 + ap) * pair.outer().mu() + ap;
}

}  // namespace conedp
