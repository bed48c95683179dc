#pragma once

#include <random>

#include "conedp/dp.hpp"
#include "conedp/sampling.hpp"

namespace conedp {

/// Distance-based probe of a set: dist(q) is the Euclidean distance from q to
/// the set (exact for analytic sets, quantized at `density` for sampled
/// ones). `nearest` is optional and enables witness recording.
struct SetProbe {
    int dim = 0;
    std::function<double(const Vec&)> dist;
    std::function<Vec(const Vec&)> nearest;
    double density = 0.0;
};

inline SetProbe cloud_probe(const PointCloud& cloud, double density = 0.0) {
    SetProbe p;
    p.dim = cloud.dim();
    p.density = density;
    p.dist = [cloud](const Vec& q) { return cloud.distance(q); };
    p.nearest = [cloud](const Vec& q) {
        double best = std::numeric_limits<double>::infinity();
        Vec arg = cloud[0];
        for (const auto& pt : cloud.points()) {
            double d = (q - pt).norm();
            if (d < best) {
                best = d;
                arg = pt;
            }
        }
        return arg;
    };
    return p;
}

/// Step ladder h_1 > ... > h_K with the admissibility slack used by all
/// estimators. Contingent objects are limits; a direction counts as "in" only
/// when it admits witnesses at every rung, with slack
///   slack(h) = c1 h + c2 density / h + c_abs
/// (the density quotient reflects sampling quantization of the probed set).
struct Ladder {
    std::vector<double> hs{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    double c1 = 1.0;
    double c2 = 1.0;
    double c_abs = 1e-9;

    double slack(double h, double density) const { return c1 * h + c2 * density / h + c_abs; }
    double threshold(double h, double density) const { return h * slack(h, density); }
};

struct DirectionWitness {
    double h = 0.0;
    Vec chord;  // realized admissible displacement (sample - base)
};

/// Sampled contingent-cone estimate: unit probe directions with an in/out
/// classification, the ladder used, and chord witnesses for in-directions
/// when the probe supports nearest-point queries.
struct ConeEstimate {
    std::vector<Vec> directions;
    std::vector<char> inside;
    std::vector<std::vector<DirectionWitness>> witnesses;
    Ladder ladder;
    double density = 0.0;

    std::vector<Vec> in_directions() const {
        std::vector<Vec> out;
        for (size_t i = 0; i < directions.size(); ++i)
            if (inside[i]) out.push_back(directions[i]);
        return out;
    }
    size_t in_count() const {
        size_t n = 0;
        for (char c : inside) n += (c != 0);
        return n;
    }
};

/// Estimates the contingent cone T_S(z) on a grid of unit directions: v is
/// "in" iff for every rung h some point of S lies within h*slack(h) of z+h v.
/// n_dirs = 0 picks the default resolution: 720 plane angles in 2D, 512
/// sphere directions otherwise.
inline ConeEstimate contingent_cone_estimate(const SetProbe& probe, const Vec& z, const Ladder& ladder = {},
                                             int n_dirs = 0) {
    if (probe.dist(z) > std::max(1e-7, 2.0 * probe.density)) throw contract_error("contingent_cone_estimate: z not in S");
    if (n_dirs <= 0) n_dirs = probe.dim == 2 ? 720 : 512;
    ConeEstimate est;
    est.ladder = ladder;
    est.density = probe.density;
    est.directions = sampling::unit_directions(probe.dim, n_dirs);
    est.inside.assign(est.directions.size(), 0);
    est.witnesses.resize(est.directions.size());
    for (size_t i = 0; i < est.directions.size(); ++i) {
        const Vec& v = est.directions[i];
        bool in = true;
        std::vector<DirectionWitness> wit;
        for (double h : ladder.hs) {
            Vec q = z + h * v;
            if (probe.dist(q) > ladder.threshold(h, probe.density)) {
                in = false;
                break;
            }
            if (probe.nearest) wit.push_back({h, probe.nearest(q) - z});
        }
        if (in) {
            est.inside[i] = 1;
            est.witnesses[i] = std::move(wit);
        }
    }
    return est;
}

enum class Minimality { proper, minimal_not_proper, not_minimal };

/// Classifies y against S via the tangent cone of S+P: proper when no
/// estimated tangent direction meets -P away from 0, minimal-not-proper when
/// only boundary directions of -P appear, not-minimal when a direction
/// penetrates -int(P). dir_tol separates the boundary band from genuine
/// interior penetration and must exceed the estimator's angular band.
inline Minimality properly_minimal(const SetProbe& s_plus_p, const Vec& y, const OrderingCone& cone,
                                   const Ladder& ladder = {}, int n_dirs = 0, double dir_tol = 5e-3) {
    ConeEstimate est = contingent_cone_estimate(s_plus_p, y, ladder, n_dirs);
    bool interior_hit = false, boundary_hit = false;
    for (size_t i = 0; i < est.directions.size(); ++i) {
        if (!est.inside[i]) continue;
        const Vec mv = -est.directions[i];
        if (cone.solid() && cone.facet_margin(mv) > dir_tol) interior_hit = true;
        else if (cone.distance(mv) < dir_tol) boundary_hit = true;
    }
    if (interior_hit) return Minimality::not_minimal;
    if (boundary_hit) return Minimality::minimal_not_proper;
    return Minimality::proper;
}

/// Black-box set-valued map sampler. range_dist(x, q) defaults to the
/// distance from q to the finite cloud evaluate(x); epigraphical wrappers
/// replace it with the exact distance to evaluate(x) + P.
struct SetMapSampler {
    int domain_dim = 0;
    int range_dim = 0;
    std::function<PointCloud(const Vec&)> evaluate;
    std::function<double(const Vec&, const Vec&)> range_dist;
    double density = 0.0;
    bool lipschitz = false;

    double dist(const Vec& x, const Vec& q) const {
        if (range_dist) return range_dist(x, q);
        return evaluate(x).distance(q);
    }
};

/// The epigraphical map F_up = F + P with exact cone-aware range distance.
inline SetMapSampler epigraphical(const SetMapSampler& map, const OrderingCone& cone) {
    SetMapSampler up = map;
    auto eval = map.evaluate;
    up.range_dist = [eval, cone](const Vec& x, const Vec& q) {
        PointCloud values = eval(x);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : values.points()) best = std::min(best, cone.distance(q - p));
        return best;
    };
    return up;
}

/// Rectangular/polar grid of candidate w values for derivative estimation.
inline std::vector<Vec> w_grid(int dim, double radius, int resolution) {
    std::vector<Vec> ws;
    if (dim == 1) {
        for (int k = -resolution; k <= resolution; ++k)
            ws.push_back(make_vec({radius * static_cast<double>(k) / resolution}));
        return ws;
    }
    if (dim == 2) {
        ws.push_back(Vec::Zero(2));
        int n_ang = std::max(8, resolution * 4);
        for (int r = 1; r <= resolution; ++r)
            for (int a = 0; a < n_ang; ++a) {
                double rho = radius * static_cast<double>(r) / resolution;
                double phi = 2.0 * M_PI * a / n_ang;
                ws.push_back(make_vec({rho * std::cos(phi), rho * std::sin(phi)}));
            }
        return ws;
    }
    std::mt19937_64 rng(4242);
    ws.push_back(Vec::Zero(dim));
    for (int k = 0; k < resolution * resolution * 8; ++k) {
        Vec v = sampling::gaussian(rng, dim);
        std::uniform_real_distribution<double> u(0.0, radius);
        ws.push_back(u(rng) * v.normalized());
    }
    return ws;
}

/// Sampled contingent derivative DF((x,y); v): candidate values w with
/// y + h w within the slack tube of F(x + h v) at every rung. The candidate
/// grid resolution widens the tube so that grid neighbors of an exact
/// derivative value still witness membership.
inline PointCloud contingent_derivative_estimate(const SetMapSampler& map, const Vec& x, const Vec& y, const Vec& v,
                                                 const Ladder& ladder, const std::vector<Vec>& candidates,
                                                 double candidate_resolution = 0.0) {
    if (map.dist(x, y) > std::max(1e-7, 2.0 * map.density))
        throw contract_error("contingent_derivative_estimate: (x,y) not on the graph");
    std::vector<Vec> in;
    for (const auto& w : candidates) {
        bool ok = true;
        for (double h : ladder.hs) {
            if (map.dist(x + h * v, y + h * w) > ladder.threshold(h, map.density) + h * candidate_resolution) {
                ok = false;
                break;
            }
        }
        if (ok) in.push_back(w);
    }
    return PointCloud(map.range_dim, std::move(in));
}

/// Generalized contingent epiderivative: minimal elements of the sampled
/// derivative of the epigraphical map. The reduction tolerance is widened to
/// the candidate grid resolution so boundary jitter collapses onto the front.
inline ParetoFront epiderivative_estimate(const SetMapSampler& map, const OrderingCone& cone, const Vec& x,
                                          const Vec& y, const Vec& v, const Ladder& ladder,
                                          const std::vector<Vec>& candidates, double grid_resolution) {
    SetMapSampler up = epigraphical(map, cone);
    PointCloud in = contingent_derivative_estimate(up, x, y, v, ladder, candidates, grid_resolution);
    if (in.empty()) return ParetoFront{};
    double h_min = *std::min_element(ladder.hs.begin(), ladder.hs.end());
    double tau = std::max(tol::mem, 4.0 * grid_resolution + ladder.slack(h_min, map.density));
    return minimal_elements(in, cone, tau);
}

/// Finite-difference lower Dini derivative of a scalar function: the liminf
/// of difference quotients over shrinking steps and perturbed directions.
/// Test oracle for the p = 1 reduction.
inline double lower_dini(const std::function<double(const Vec&)>& f, const Vec& z, const Vec& dir,
                         const std::vector<double>& hs = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4}, int n_perturb = 8,
                         double perturb_scale = 1e-3) {
    double best = std::numeric_limits<double>::infinity();
    double f0 = f(z);
    std::mt19937_64 rng(31337);
    for (double h : hs) {
        best = std::min(best, (f(z + h * dir) - f0) / h);
        for (int k = 0; k < n_perturb; ++k) {
            Vec d = dir + perturb_scale * sampling::gaussian(rng, static_cast<int>(z.size()));
            best = std::min(best, (f(z + h * d) - f0) / h);
        }
    }
    return best;
}

/// Recession-cone probe: directions realizable at every scale of a geometric
/// ladder up to the ray budget, within angular tolerance. The zero direction
/// is always included.
inline std::vector<Vec> recession_probe(const SetProbe& probe, double ray_budget, int n_dirs = 720,
                                        double tau_ang = 1e-2) {
    std::vector<Vec> out;
    out.push_back(Vec::Zero(probe.dim));
    std::vector<double> scales;
    for (double s = std::max(1.0, ray_budget / 64.0); s <= ray_budget * (1 + 1e-12); s *= 2.0) scales.push_back(s);
    for (const auto& v : sampling::unit_directions(probe.dim, n_dirs)) {
        bool ok = true;
        for (double s : scales) {
            if (probe.dist(s * v) > s * tau_ang + probe.density) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// (FL)(x) sampling and the generalized contingent-solution residuals.
// ---------------------------------------------------------------------------

struct FLSample {
    Vec f;
    Vec L;
    bool vertex = false;
};

/// Samples of the closed convex hull of {(f(x,u), L(x,u)) : u in U}: all
/// vertices plus seeded random convex combinations.
inline std::vector<FLSample> fl_samples(const ControlProblem& prob, const Vec& x, int n_hull = 32,
                                        uint64_t seed = 4711) {
    std::vector<FLSample> out;
    std::vector<std::pair<Vec, Vec>> verts;
    for (const auto& u : prob.control_samples) {
        verts.emplace_back(prob.dynamics(x, u), prob.running_cost(x, u));
        out.push_back({verts.back().first, verts.back().second, true});
    }
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expd(1.0);
    for (int k = 0; k < n_hull && verts.size() > 1; ++k) {
        std::vector<double> wts(verts.size());
        double total = 0.0;
        for (auto& w : wts) total += (w = expd(rng));
        Vec f = Vec::Zero(prob.state_dim), L = Vec::Zero(prob.cost_dim);
        for (size_t j = 0; j < verts.size(); ++j) {
            f += wts[j] / total * verts[j].first;
            L += wts[j] / total * verts[j].second;
        }
        out.push_back({f, L, false});
    }
    return out;
}

struct RungTrace {
    double tau = 0.0;
    double dist = 0.0;  // distance from probe point to W_up, divided by tau
};

/// Residual report for the two membership conditions of a generalized
/// contingent solution at a front point y of the field at (slice, node).
struct ContingentReport {
    bool terminal_checked = false;  // slice == n_time: front must be {0}
    bool terminal_ok = true;
    bool cond1_applicable = false, cond2_applicable = false;
    bool cond1_ok = false, cond2_ok = false;
    double res1 = std::numeric_limits<double>::infinity();  // best over FL samples
    double res2 = 0.0;                                      // worst over FL samples
    int witness1 = -1;
    std::vector<RungTrace> trace1, trace2;  // ladder trace of the deciding sample
    bool ext1_agrees = true, ext2_agrees = true;
    double tol_tan = 0.0;
};

/// The documented grid budget for the membership residuals: front error
/// (interpolation + one-step cost resolution) divided by the smallest probe
/// length, plus the hull-resolution term of piecewise-constant mixing.
inline double default_tol_tan(const ControlProblem& prob, const GridSpec& grid, int min_rung_steps = 1) {
    double front_err = default_tol_dpp(prob, grid);
    double tau_min = grid.h() * min_rung_steps;
    return front_err / tau_min + 2.0 * (prob.M_f * prob.K_L / prob.K_f + prob.M_L) * grid.h() / tau_min;
}

/// Evaluates the forward (exists f,L) and backward (for all f,L) contingent
/// membership residuals of the solved field against sampled (FL)(x).
/// Rungs are grid-aligned multiples of the time step.
inline ContingentReport contingent_solution_residual(const ValueField& field, const ControlProblem& prob,
                                                     const OrderingCone& cone, int slice, size_t node, const Vec& y,
                                                     double tol_tan = -1.0, const std::vector<int>& rung_steps = {1, 2, 4},
                                                     int n_hull = 32, uint64_t seed = 4711,
                                                     bool check_reformulations = false) {
    const GridSpec& g = field.grid;
    Vec x = g.node_state(node);
    {
        const auto& fr = field.front(slice, node);
        bool on_front = false;
        for (const auto& p : fr.points)
            if ((p - y).norm() < 1e-9) on_front = true;
        if (!on_front) throw contract_error("contingent_solution_residual: y not on the stored front");
    }
    ContingentReport rep;
    rep.tol_tan = tol_tan > 0 ? tol_tan : default_tol_tan(prob, g);
    if (slice == g.n_time) {
        rep.terminal_checked = true;
        rep.terminal_ok = (y.norm() < 1e-12);
        return rep;
    }
    auto fls = fl_samples(prob, x, n_hull, seed);

    auto residual = [&](const Vec& f, const Vec& L, int time_sign, std::vector<RungTrace>* trace) {
        // time_sign +1: direction (1, f), value step -L (condition 1);
        // time_sign -1: direction (-1, -f), value step +L (condition 2).
        double worst = 0.0;
        bool any = false;
        for (int k : rung_steps) {
            int s2 = slice + time_sign * k;
            if (s2 < 0 || s2 > g.n_time) continue;
            double tau = g.h() * k;
            Vec x2 = x + static_cast<double>(time_sign) * tau * f;
            Vec q = y - static_cast<double>(time_sign) * tau * L;
            double d = field.up_distance(s2, x2, q, cone) / tau;
            if (trace) trace->push_back({tau, d});
            worst = std::max(worst, d);
            any = true;
        }
        return any ? worst : -1.0;
    };

    // Condition 1: exists (f,L) with -L in DW_up((t,x,y); (1,f)).
    if (slice < g.n_time) {
        for (size_t i = 0; i < fls.size(); ++i) {
            std::vector<RungTrace> tr;
            double r = residual(fls[i].f, fls[i].L, +1, &tr);
            if (r < 0) continue;
            rep.cond1_applicable = true;
            if (r < rep.res1) {
                rep.res1 = r;
                rep.witness1 = static_cast<int>(i);
                rep.trace1 = std::move(tr);
            }
        }
        rep.cond1_ok = rep.cond1_applicable && rep.res1 <= rep.tol_tan;
    }
    // Condition 2: for all (f,L), L in DW_up((t,x,y); (-1,-f)).
    if (slice > 0) {
        for (const auto& s : fls) {
            std::vector<RungTrace> tr;
            double r = residual(s.f, s.L, -1, &tr);
            if (r < 0) continue;
            rep.cond2_applicable = true;
            if (r > rep.res2) {
                rep.res2 = r;
                rep.trace2 = std::move(tr);
            }
        }
        rep.cond2_ok = rep.cond2_applicable && rep.res2 <= rep.tol_tan;
    }

    if (check_reformulations && cone.solid()) {
        // Re-evaluate the compact reformulations from the same estimates:
        // cond1 implies 0 in E(cl{L + Dup W((1,f))}, P) + P, and cond2
        // implies 0 in E(cl{-L + Dup W((-1,-f))}, -P) + P; disagreement
        // flags an estimator defect. (The closedness hypothesis on
        // E(cl(S), -P) is not checkable from samples and is not attempted.)
        SetMapSampler wmap;
        wmap.domain_dim = 1 + prob.state_dim;
        wmap.range_dim = prob.cost_dim;
        wmap.density = std::max(g.max_spacing(), g.h());
        const ValueField* fp = &field;
        const GridSpec* gp = &g;
        wmap.evaluate = [fp, gp](const Vec& tx) {
            int s = static_cast<int>(std::lround(std::clamp(tx[0] / gp->h(), 0.0, static_cast<double>(gp->n_time))));
            Vec xs = tx.tail(tx.size() - 1);
            return PointCloud(fp->cost_dim, fp->value_points(s, xs, /*clamp_probe=*/true));
        };
        double radius = 2.0 * (prob.M_L + 1.0);
        auto ws = w_grid(prob.cost_dim, radius, 12);
        double res_w = radius / 12.0;
        Vec tx(1 + prob.state_dim);
        tx[0] = slice * g.h();
        tx.tail(prob.state_dim) = x;

        auto reformulation = [&](int time_sign, const OrderingCone& outer_cone, bool cond_ok) {
            Ladder lad;
            lad.hs.clear();
            for (int k : rung_steps) {
                int s2 = slice + time_sign * k;
                if (s2 >= 0 && s2 <= g.n_time) lad.hs.push_back(g.h() * k);
            }
            std::sort(lad.hs.rbegin(), lad.hs.rend());
            if (lad.hs.empty()) return true;
            std::vector<Vec> pool;
            bool all_nonempty = true;
            for (const auto& s : fls) {
                Vec dir(1 + prob.state_dim);
                dir[0] = static_cast<double>(time_sign);
                dir.tail(prob.state_dim) = static_cast<double>(time_sign) * s.f;
                ParetoFront d_up = epiderivative_estimate(wmap, cone, tx, y, dir, lad, ws, res_w);
                if (d_up.empty()) {
                    all_nonempty = false;
                    continue;
                }
                for (const auto& w : d_up.points) pool.push_back(static_cast<double>(time_sign) * s.L + w);
            }
            if (pool.empty()) return true;
            ParetoFront e = minimal_elements(PointCloud(prob.cost_dim, pool), outer_cone,
                                             std::max(tol::mem, 2.0 * res_w));
            double band = rep.tol_tan * lad.hs.front() / lad.hs.back() + 2.0 * res_w;
            bool zero_in = false;
            for (const auto& pt : e.points)
                if (cone.distance(-pt) <= band) zero_in = true;
            return !cond_ok || !all_nonempty || zero_in;
        };
        rep.ext1_agrees = reformulation(+1, cone, rep.cond1_ok);
        rep.ext2_agrees = reformulation(-1, cone.negated(), rep.cond2_ok);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Proximal normals of sampled graphs and the proximal-solution residual.
// ---------------------------------------------------------------------------

/// Local sample of a graph set around a base point, with its quantization
/// density. Points include the base itself.
struct GraphSamples {
    Vec base;
    std::vector<Vec> points;
    double density = 0.0;
};

/// Samples graph(W_up) near (t_slice, x_node, y): neighboring slices/nodes,
/// their front points, and cone-ray offsets representing the +P fibers.
inline GraphSamples field_graph_samples(const ValueField& field, const OrderingCone& cone, int slice, size_t node,
                                        const Vec& y, int slice_radius = 2, int node_radius = 2, int n_rays = 8,
                                        int n_radii = 3) {
    const GridSpec& g = field.grid;
    const int n = static_cast<int>(g.nodes.size());
    GraphSamples out;
    Vec x0 = g.node_state(node);
    out.base = Vec(1 + n + field.cost_dim);
    out.base[0] = slice * g.h();
    out.base.segment(1, n) = x0;
    out.base.tail(field.cost_dim) = y;

    std::vector<Vec> rays;
    for (const auto& gvec : cone.unit_generators()) rays.push_back(gvec);
    std::mt19937_64 rng(7);
    for (int k = static_cast<int>(rays.size()); k < n_rays; ++k) rays.push_back(sampling::cone_point(rng, cone).normalized());

    double ray_step = std::max(g.h(), g.max_spacing());
    out.density = std::max({g.h(), g.max_spacing(), ray_step});

    // Enumerate neighbor nodes within a box radius.
    std::vector<size_t> nodes;
    std::function<void(int, std::vector<long>&)> rec = [&](int d, std::vector<long>& idx) {
        if (d == n) {
            size_t flat = 0, stride = 1;
            for (int i = 0; i < n; ++i) {
                flat += static_cast<size_t>(idx[static_cast<size_t>(i)]) * stride;
                stride *= static_cast<size_t>(g.nodes[static_cast<size_t>(i)]);
            }
            nodes.push_back(flat);
            return;
        }
        long base_idx = std::lround((x0[d] - g.lo[d]) / std::max(g.spacing(d), 1e-300));
        if (g.nodes[static_cast<size_t>(d)] == 1) base_idx = 0;
        for (long off = -node_radius; off <= node_radius; ++off) {
            long j = base_idx + off;
            if (j < 0 || j >= g.nodes[static_cast<size_t>(d)]) continue;
            idx.push_back(j);
            rec(d + 1, idx);
            idx.pop_back();
        }
    };
    std::vector<long> idx;
    rec(0, idx);

    for (int s = std::max(0, slice - slice_radius); s <= std::min(g.n_time, slice + slice_radius); ++s) {
        for (size_t j : nodes) {
            Vec xs = g.node_state(j);
            for (const auto& fp : field.front(s, j).points) {
                for (int r = 0; r <= n_radii; ++r) {
                    for (size_t ri = 0; ri < rays.size(); ++ri) {
                        if (r == 0 && ri > 0) break;
                        Vec pt(1 + n + field.cost_dim);
                        pt[0] = s * g.h();
                        pt.segment(1, n) = xs;
                        pt.tail(field.cost_dim) = fp + static_cast<double>(r) * ray_step * rays[ri];
                        out.points.push_back(pt);
                    }
                }
            }
        }
    }
    return out;
}

struct AcceptedNormal {
    Vec nu;              // unit normal (xi*, v*, w-component); w* = -w-component
    double residual = 0.0;
    bool ambiguous = false;
};

struct ProximalReport {
    std::vector<AcceptedNormal> normals;
    int n_candidates = 0;
    double max_residual = 0.0;
    double max_polarity = -std::numeric_limits<double>::infinity();
    bool normals_found() const { return !normals.empty(); }
};

/// Supporting-separation acceptance: nu is kept when <nu, g - z0> <= tau_rel
/// for every local sample g, which makes z0 the unique projection of
/// z0 + rho nu for every rho > 0. The rho-ladder probe additionally flags
/// distant competing wells as ambiguous.
inline bool accept_normal(const GraphSamples& samples, const Vec& nu, double tau_rel, bool* ambiguous) {
    for (const auto& gpt : samples.points) {
        Vec d = gpt - samples.base;
        double nd = d.norm();
        if (nd < 1e-12) continue;
        if (nu.dot(d) > tau_rel * nd) return false;
    }
    if (ambiguous) {
        *ambiguous = false;
        for (double rho_mult : {2.0, 4.0, 8.0}) {
            double rho = rho_mult * samples.density;
            Vec q = samples.base + rho * nu;
            for (const auto& gpt : samples.points) {
                double dist_base = (gpt - samples.base).norm();
                if (dist_base > 2.0 * rho && (q - gpt).norm() < 1.5 * rho) *ambiguous = true;
            }
        }
    }
    return true;
}

/// Candidate normals with the value-space component pinned to an outward
/// facet direction -n of P and the time/state slopes chosen so the plane
/// supports the local graph samples: for every neighbor front point y' at
/// offset (dt, dx) the slope p must satisfy  p . (dt, dx) <= <n, y' - y>.
/// The slopes start at the least-squares fit of the tracked front point and
/// are corrected by cyclic projection onto the constraint halfspaces; an
/// infeasible facet (locally concave graph) yields no candidate.
inline std::vector<Vec> supporting_normal_candidates(const ValueField& field, const OrderingCone& cone, int slice,
                                                     size_t node, const Vec& y, int slice_radius = 2,
                                                     int node_radius = 2) {
    const GridSpec& g = field.grid;
    const int n = static_cast<int>(g.nodes.size());
    std::vector<Vec> out;
    if (!cone.solid()) return out;

    std::vector<Vec> offsets;                // (dt, dx) per neighbor
    std::vector<std::vector<Vec>> fronts;    // front points per neighbor
    std::vector<Vec> tracked;                // nearest front point per neighbor
    Vec x0 = g.node_state(node);
    for (int s = std::max(0, slice - slice_radius); s <= std::min(g.n_time, slice + slice_radius); ++s) {
        for (size_t j = 0; j < g.node_count(); ++j) {
            Vec xs = g.node_state(j);
            if ((xs - x0).lpNorm<Eigen::Infinity>() > node_radius * g.max_spacing() + 1e-12) continue;
            const auto& pts = field.front(s, j).points;
            if (pts.empty()) continue;
            Vec dtx(1 + n);
            dtx[0] = (s - slice) * g.h();
            dtx.tail(n) = xs - x0;
            offsets.push_back(dtx);
            fronts.push_back(pts);
            Vec bestp = pts[0];
            for (const auto& p : pts)
                if ((p - y).norm() < (bestp - y).norm()) bestp = p;
            tracked.push_back(bestp);
        }
    }
    if (offsets.size() < static_cast<size_t>(2 + n)) return out;

    Mat A(static_cast<Eigen::Index>(offsets.size()), 1 + n);
    Mat Y(static_cast<Eigen::Index>(offsets.size()), field.cost_dim);
    for (size_t r = 0; r < offsets.size(); ++r) {
        A.row(static_cast<Eigen::Index>(r)) = offsets[r].transpose();
        Y.row(static_cast<Eigen::Index>(r)) = (tracked[r] - y).transpose();
    }
    Mat coef = (A.transpose() * A + 1e-12 * Mat::Identity(1 + n, 1 + n)).ldlt().solve(A.transpose() * Y);

    for (const auto& nf : cone.facet_normals()) {
        // Binding constraint per neighbor: the front point minimizing <nf, .>.
        std::vector<double> bounds(offsets.size());
        bool feasible = true;
        for (size_t r = 0; r < offsets.size(); ++r) {
            double b = std::numeric_limits<double>::infinity();
            for (const auto& yp : fronts[r]) b = std::min(b, nf.dot(yp - y));
            bounds[r] = b;
            if (offsets[r].norm() < 1e-14 && b < -1e-12) feasible = false;  // same node cuts the plane
        }
        if (!feasible) continue;

        Vec p(1 + n);
        p[0] = nf.dot(Vec(coef.row(0).transpose()));
        for (int d = 0; d < n; ++d) p[1 + d] = nf.dot(Vec(coef.row(1 + d).transpose()));
        double worst = 0.0;
        for (int sweep = 0; sweep < 400; ++sweep) {
            worst = 0.0;
            for (size_t r = 0; r < offsets.size(); ++r) {
                double an = offsets[r].squaredNorm();
                if (an < 1e-18) continue;
                double viol = p.dot(offsets[r]) - bounds[r];
                if (viol > 0.0) p -= (viol / an) * offsets[r];
                worst = std::max(worst, viol);
            }
            if (worst <= 1e-13) break;
        }
        if (worst > 1e-12) continue;  // no supporting plane for this facet here
        Vec nu(1 + n + field.cost_dim);
        nu.head(1 + n) = p;
        nu.tail(field.cost_dim) = -nf;
        out.push_back(nu.normalized());
    }
    return out;
}

/// Recovers proximal normals to graph(W_up) at (t, x, y), evaluates the
/// Hamiltonian residual |xi* + min <v*,f> + <w*,L>| over sampled (FL)(x), and
/// verifies tangent/normal polarity against the estimated tangent witnesses.
inline ProximalReport proximal_residual(const ValueField& field, const ControlProblem& prob, const OrderingCone& cone,
                                        int slice, size_t node, const Vec& y, int n_sphere_candidates = 128,
                                        int n_hull = 32, uint64_t seed = 4711, double tau_accept = 1e-9) {
    GraphSamples samples = field_graph_samples(field, cone, slice, node, y);
    ProximalReport rep;
    const int total_dim = static_cast<int>(samples.base.size());

    std::vector<Vec> candidates = supporting_normal_candidates(field, cone, slice, node, y);
    for (const auto& v : sampling::unit_directions(total_dim, n_sphere_candidates)) candidates.push_back(v);
    rep.n_candidates = static_cast<int>(candidates.size());

    auto fls = fl_samples(prob, field.grid.node_state(node), n_hull, seed);

    // Tangent estimate of the sampled graph at the base, for polarity.
    PointCloud graph_cloud(total_dim, samples.points);
    SetProbe probe = cloud_probe(graph_cloud, samples.density);
    Ladder lad;
    lad.hs = {4.0 * samples.density, 2.0 * samples.density, samples.density};
    ConeEstimate tangents = contingent_cone_estimate(probe, samples.base, lad, total_dim <= 3 ? 360 : 256);

    for (const auto& cand : candidates) {
        bool ambiguous = false;
        if (!accept_normal(samples, cand, tau_accept, &ambiguous)) continue;
        AcceptedNormal an;
        an.nu = cand;
        an.ambiguous = ambiguous;
        double xi = cand[0];
        Vec vstar = cand.segment(1, prob.state_dim);
        Vec wstar = -cand.tail(prob.cost_dim);
        double ham = std::numeric_limits<double>::infinity();
        for (const auto& s : fls) ham = std::min(ham, vstar.dot(s.f) + wstar.dot(s.L));
        an.residual = std::abs(xi + ham);
        rep.max_residual = std::max(rep.max_residual, an.residual);
        for (size_t i = 0; i < tangents.directions.size(); ++i) {
            if (!tangents.inside[i]) continue;
            for (const auto& w : tangents.witnesses[i]) {
                if (w.chord.norm() < 1e-12) continue;
                rep.max_polarity = std::max(rep.max_polarity, cand.dot(w.chord) / w.chord.norm());
            }
        }
        rep.normals.push_back(std::move(an));
    }
    return rep;
}

struct BoundaryReport {
    double gap_t0 = 0.0;
    double gap_T = 0.0;
};

/// Boundary-condition probe: front points at the extreme slices must be
/// reachable as limits from the interior side (distance into the union of
/// adjacent-slice neighbor fronts + P).
inline BoundaryReport boundary_condition_probe(const ValueField& field, const OrderingCone& cone, size_t node) {
    const GridSpec& g = field.grid;
    auto gap_at = [&](int slice, int inner_slice) {
        double worst = 0.0;
        Vec x = g.node_state(node);
        for (const auto& y : field.front(slice, node).points) {
            double best = std::numeric_limits<double>::infinity();
            for (size_t d = 0; d < g.nodes.size(); ++d) {
                for (int off = -1; off <= 1; ++off) {
                    Vec x2 = x;
                    x2[static_cast<Eigen::Index>(d)] += off * g.spacing(static_cast<int>(d));
                    if (x2[static_cast<Eigen::Index>(d)] < g.lo[static_cast<Eigen::Index>(d)] - 1e-12 ||
                        x2[static_cast<Eigen::Index>(d)] > g.hi[static_cast<Eigen::Index>(d)] + 1e-12)
                        continue;
                    for (const auto& yf : field.front(inner_slice, g.nearest_node(x2)).points)
                        best = std::min(best, cone.distance(y - yf));
                }
            }
            worst = std::max(worst, best);
        }
        return worst;
    };
    BoundaryReport rep;
    rep.gap_t0 = gap_at(0, std::min(1, g.n_time));
    rep.gap_T = gap_at(g.n_time, std::max(0, g.n_time - 1));
    return rep;
}

}  // namespace conedp
