#pragma once

#include <random>

#include "conedp/cone.hpp"
#include "conedp/pareto.hpp"

namespace conedp {

/// Seeded sampling helpers shared by randomized property checks.
namespace sampling {

inline Vec gaussian(std::mt19937_64& rng, int dim, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Vec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = g(rng);
    return v;
}

inline Vec uniform_box(std::mt19937_64& rng, const Vec& lo, const Vec& hi) {
    Vec v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        std::uniform_real_distribution<double> u(lo[i], hi[i]);
        v[i] = u(rng);
    }
    return v;
}

inline PointCloud uniform_cloud(std::mt19937_64& rng, int dim, int n, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<Vec> pts;
    pts.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        Vec p(dim);
        for (Eigen::Index i = 0; i < dim; ++i) p[i] = u(rng);
        pts.push_back(p);
    }
    return PointCloud(dim, std::move(pts));
}

/// A random nonzero element of the cone (conic combination of generators).
inline Vec cone_point(std::mt19937_64& rng, const OrderingCone& cone, double scale = 1.0) {
    std::exponential_distribution<double> e(1.0);
    Vec v = Vec::Zero(cone.dim());
    for (const auto& g : cone.unit_generators()) v += e(rng) * g;
    return scale * v;
}

/// Evenly spaced unit directions: all plane angles in 2D, a Fibonacci sphere
/// in 3D, Gaussian-normalized samples above.
inline std::vector<Vec> unit_directions(int dim, int n, uint64_t seed = 2024) {
    std::vector<Vec> dirs;
    dirs.reserve(static_cast<size_t>(n));
    if (dim == 1) {
        dirs.push_back(make_vec({1.0}));
        dirs.push_back(make_vec({-1.0}));
        return dirs;
    }
    if (dim == 2) {
        for (int k = 0; k < n; ++k) {
            double a = 2.0 * M_PI * k / n;
            dirs.push_back(make_vec({std::cos(a), std::sin(a)}));
        }
        return dirs;
    }
    if (dim == 3) {
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < n; ++k) {
            double z = 1.0 - 2.0 * (k + 0.5) / n;
            double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            double a = golden * k;
            dirs.push_back(make_vec({r * std::cos(a), r * std::sin(a), z}));
        }
        return dirs;
    }
    std::mt19937_64 rng(seed);
    for (int k = 0; k < n; ++k) {
        Vec v = gaussian(rng, dim);
        if (v.norm() < 1e-12) {
            --k;
            continue;
        }
        dirs.push_back(v.normalized());
    }
    return dirs;
}

/// Constructs a random cloud guaranteed to lie in K(C,P): a C-antichain base
/// (whose P-front and C-front both equal the base) plus P-dominated fillers.
inline PointCloud kcp_cloud(std::mt19937_64& rng, const ConePair& pair, int n_base, int n_fill,
                            double spread = 1.0) {
    const int dim = pair.inner().dim();
    std::vector<Vec> base;
    int attempts = 0;
    while (static_cast<int>(base.size()) < n_base && attempts < 200 * n_base) {
        ++attempts;
        Vec cand = gaussian(rng, dim, spread);
        bool ok = true;
        for (const auto& b : base) {
            if (detail::dominates(pair.outer(), b, cand, tol::mem) ||
                detail::dominates(pair.outer(), cand, b, tol::mem) || (cand - b).norm() < 1e-6) {
                ok = false;
                break;
            }
        }
        if (ok) base.push_back(cand);
    }
    if (base.empty()) throw numeric_error("kcp_cloud: failed to sample an antichain base");
    std::vector<Vec> pts = base;
    std::uniform_int_distribution<size_t> pick(0, base.size() - 1);
    std::uniform_real_distribution<double> mag(0.05, spread);
    for (int k = 0; k < n_fill; ++k)
        pts.push_back(base[pick(rng)] + cone_point(rng, pair.inner(), mag(rng)));
    return PointCloud(dim, std::move(pts));
}

}  // namespace sampling
}  // namespace conedp
