#pragma once

#include <algorithm>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "conedp/control.hpp"
#include "conedp/pareto.hpp"

namespace conedp {

enum class Interp { nearest, corners };
enum class Escape { error, clamp };

/// Uniform time grid over [0, horizon] and a rectangular state lattice.
struct GridSpec {
    double horizon = 0.0;
    int n_time = 0;  // time step h = horizon / n_time
    Vec lo, hi;
    std::vector<int> nodes;  // lattice points per state dimension (>= 1)
    Interp interp = Interp::nearest;
    Escape escape = Escape::error;
    double eps_front = 0.0;

    double h() const { return horizon / n_time; }
    double spacing(int d) const {
        return nodes[static_cast<size_t>(d)] > 1
                   ? (hi[d] - lo[d]) / (nodes[static_cast<size_t>(d)] - 1)
                   : 0.0;
    }
    double max_spacing() const {
        double m = 0.0;
        for (size_t d = 0; d < nodes.size(); ++d) m = std::max(m, spacing(static_cast<int>(d)));
        return m;
    }
    size_t node_count() const {
        size_t n = 1;
        for (int k : nodes) n *= static_cast<size_t>(k);
        return n;
    }

    void validate(int state_dim) const {
        if (n_time < 1) throw contract_error("grid: need at least one time step");
        if (!(horizon > 0.0)) throw contract_error("grid: horizon must be positive");
        if (lo.size() != state_dim || hi.size() != state_dim || static_cast<int>(nodes.size()) != state_dim)
            throw contract_error("grid: state box dimension mismatch");
        for (int d = 0; d < state_dim; ++d) {
            if (!(hi[d] >= lo[d])) throw contract_error("grid: empty box");
            if (nodes[static_cast<size_t>(d)] < 1) throw contract_error("grid: need >= 1 node per dim");
        }
    }

    Vec node_state(size_t flat) const {
        Vec x(lo.size());
        for (size_t d = 0; d < nodes.size(); ++d) {
            size_t nd = static_cast<size_t>(nodes[d]);
            x[static_cast<Eigen::Index>(d)] = lo[static_cast<Eigen::Index>(d)] +
                                              spacing(static_cast<int>(d)) * static_cast<double>(flat % nd);
            flat /= nd;
        }
        return x;
    }

    /// Nearest lattice node of a state; honors the escape policy when the
    /// state leaves the box (callers may override the policy for probes).
    size_t nearest_node(const Vec& x, double escape_tol = 1e-9) const { return nearest_node(x, escape, escape_tol); }

    size_t nearest_node(const Vec& x, Escape policy, double escape_tol = 1e-9) const {
        size_t flat = 0, stride = 1;
        for (size_t d = 0; d < nodes.size(); ++d) {
            Eigen::Index di = static_cast<Eigen::Index>(d);
            if (x[di] < lo[di] - escape_tol || x[di] > hi[di] + escape_tol) {
                if (policy == Escape::error) {
                    std::ostringstream msg;
                    msg << "trajectory leaves grid box at state (";
                    for (Eigen::Index i = 0; i < x.size(); ++i) msg << (i ? ", " : "") << x[i];
                    msg << "), dimension " << d;
                    throw numeric_error(msg.str());
                }
            }
            long idx = 0;
            if (nodes[d] > 1) idx = std::lround((x[di] - lo[di]) / spacing(static_cast<int>(d)));
            idx = std::clamp(idx, 0L, static_cast<long>(nodes[d] - 1));
            flat += static_cast<size_t>(idx) * stride;
            stride *= static_cast<size_t>(nodes[d]);
        }
        return flat;
    }

    /// Flat indices of the cell corners enclosing x (clamped to the box).
    std::vector<size_t> corner_nodes(const Vec& x, double escape_tol = 1e-9) const {
        return corner_nodes(x, escape, escape_tol);
    }

    std::vector<size_t> corner_nodes(const Vec& x, Escape policy, double escape_tol = 1e-9) const {
        std::vector<std::pair<long, long>> bounds;
        for (size_t d = 0; d < nodes.size(); ++d) {
            Eigen::Index di = static_cast<Eigen::Index>(d);
            if ((x[di] < lo[di] - escape_tol || x[di] > hi[di] + escape_tol) && policy == Escape::error) {
                std::ostringstream msg;
                msg << "trajectory leaves grid box at state (";
                for (Eigen::Index i = 0; i < x.size(); ++i) msg << (i ? ", " : "") << x[i];
                msg << "), dimension " << d;
                throw numeric_error(msg.str());
            }
            long lo_idx = 0, hi_idx = 0;
            if (nodes[d] > 1) {
                double t = (x[di] - lo[di]) / spacing(static_cast<int>(d));
                if (std::abs(t - std::round(t)) < 1e-9) {
                    // Lattice-exact landing: degenerate cell, single corner.
                    lo_idx = hi_idx = std::clamp(static_cast<long>(std::lround(t)), 0L,
                                                 static_cast<long>(nodes[d] - 1));
                } else {
                    lo_idx = std::clamp(static_cast<long>(std::floor(t)), 0L, static_cast<long>(nodes[d] - 1));
                    hi_idx = std::clamp(lo_idx + 1, 0L, static_cast<long>(nodes[d] - 1));
                }
            }
            bounds.emplace_back(lo_idx, hi_idx);
        }
        std::vector<size_t> corners;
        size_t n_corners = size_t{1} << bounds.size();
        for (size_t mask = 0; mask < n_corners; ++mask) {
            size_t flat = 0, stride = 1;
            for (size_t d = 0; d < bounds.size(); ++d) {
                long idx = (mask >> d) & 1 ? bounds[d].second : bounds[d].first;
                flat += static_cast<size_t>(idx) * stride;
                stride *= static_cast<size_t>(nodes[d]);
            }
            corners.push_back(flat);
        }
        std::sort(corners.begin(), corners.end());
        corners.erase(std::unique(corners.begin(), corners.end()), corners.end());
        return corners;
    }
};

/// The grid-sampled set-valued return function: one Pareto front per
/// (time slice, state node). The terminal slice is {0} everywhere.
struct ValueField {
    GridSpec grid;
    int cost_dim = 0;
    std::vector<std::vector<ParetoFront>> fronts;  // [slice 0..n_time][node]

    const ParetoFront& front(int slice, size_t node) const {
        return fronts[static_cast<size_t>(slice)][node];
    }

    /// Candidate value points at an off-lattice state per interpolation mode:
    /// the nearest node's front, or the union of the cell-corner fronts.
    /// Solve-time landings honor the escape policy; verification probes use
    /// clamped lookups (probe points near the box edge are expected).
    std::vector<Vec> value_points(int slice, const Vec& x, bool clamp_probe = false) const {
        Escape policy = clamp_probe ? Escape::clamp : grid.escape;
        if (grid.interp == Interp::nearest) return front(slice, grid.nearest_node(x, policy)).points;
        std::vector<Vec> out;
        for (size_t c : grid.corner_nodes(x, policy))
            for (const auto& y : front(slice, c).points) out.push_back(y);
        return out;
    }

    /// Distance from q to the epigraphical value set W_up(t_slice, x) =
    /// front + P, the quantity used by the tangent estimators.
    double up_distance(int slice, const Vec& x, const Vec& q, const OrderingCone& cone) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& y : value_points(slice, x, /*clamp_probe=*/true)) best = std::min(best, cone.distance(q - y));
        return best;
    }
};

/// One backward step at a single node: next-slice fronts are combined with
/// the one-step costs of every control, then reduced to minimal elements.
inline ParetoFront backup_node(const ControlProblem& prob, const OrderingCone& cone, const ValueField& field,
                               int next_slice, const Vec& x, double tau_mem = tol::mem) {
    const GridSpec& g = field.grid;
    std::vector<Vec> candidates;
    for (const auto& u : prob.control_samples) {
        Vec z = x, c = Vec::Zero(prob.cost_dim);
        detail::rk4_step(prob, g.h(), u, z, c);
        for (const auto& y : field.value_points(next_slice, z)) candidates.push_back(c + y);
    }
    ParetoFront f = minimal_elements(PointCloud(prob.cost_dim, std::move(candidates)), cone, tau_mem);
    if (g.eps_front > 0.0) f = epsilon_archive(f, cone, g.eps_front, tau_mem);
    return f;
}

/// Solves the set-valued dynamic programming recursion backward in time over
/// the grid. Nodes within a slice are independent and fan out over `jobs`
/// worker threads; results are deterministic regardless of the schedule.
inline ValueField backward_solve(const ControlProblem& prob, const OrderingCone& cone, const GridSpec& grid,
                                 int jobs = 1, double tau_mem = tol::mem) {
    prob.validate();
    grid.validate(prob.state_dim);
    if (cone.dim() != prob.cost_dim) throw contract_error("backward_solve: cone/cost dimension mismatch");
    ValueField field;
    field.grid = grid;
    field.cost_dim = prob.cost_dim;
    const size_t n_nodes = grid.node_count();
    field.fronts.assign(static_cast<size_t>(grid.n_time) + 1, std::vector<ParetoFront>(n_nodes));
    for (size_t j = 0; j < n_nodes; ++j) field.fronts[static_cast<size_t>(grid.n_time)][j].points = {Vec::Zero(prob.cost_dim)};

    for (int slice = grid.n_time - 1; slice >= 0; --slice) {
        auto& out = field.fronts[static_cast<size_t>(slice)];
        std::exception_ptr first_error = nullptr;
        std::mutex err_mutex;
        auto work = [&](size_t begin, size_t end) {
            try {
                for (size_t j = begin; j < end; ++j)
                    out[j] = backup_node(prob, cone, field, slice + 1, grid.node_state(j), tau_mem);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        };
        int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n_nodes)));
        if (workers == 1) {
            work(0, n_nodes);
        } else {
            std::vector<std::thread> pool;
            size_t chunk = (n_nodes + workers - 1) / static_cast<size_t>(workers);
            for (int w = 0; w < workers; ++w) {
                size_t b = static_cast<size_t>(w) * chunk;
                size_t e = std::min(n_nodes, b + chunk);
                if (b < e) pool.emplace_back(work, b, e);
            }
            for (auto& t : pool) t.join();
        }
        if (first_error) std::rethrow_exception(first_error);
    }
    return field;
}

struct DppReport {
    double gap_candidates_in_cloud = 0.0;   // composite candidates vs exact cloud
    double gap_cloud_in_candidates = 0.0;   // exact cloud vs candidates + P
    double gap_fronts = 0.0;                // Hausdorff between the two fronts
    bool ok(double tol_dpp) const {
        return gap_candidates_in_cloud <= tol_dpp && gap_cloud_in_candidates <= tol_dpp && gap_fronts <= tol_dpp;
    }
};

namespace detail {

/// Exhaustive objective cloud from a grid node with per-step nearest-node
/// landing: exactly the discrete process the solver recursion induces.
inline std::vector<Vec> snapped_cloud(const ControlProblem& prob, const GridSpec& grid, const Vec& x, int depth) {
    std::vector<Vec> costs;
    std::function<void(int, const Vec&, const Vec&)> rec = [&](int d, const Vec& xs, const Vec& acc) {
        if (d == depth) {
            costs.push_back(acc);
            return;
        }
        for (const auto& u : prob.control_samples) {
            Vec z = xs, c = acc;
            rk4_step(prob, grid.h(), u, z, c);
            rec(d + 1, grid.node_state(grid.nearest_node(z)), c);
        }
    };
    rec(0, x, Vec::Zero(prob.cost_dim));
    return costs;
}

}  // namespace detail

/// Compares the k-step composite construction Y~ against the exact discrete
/// objective cloud from the same node (both with nearest-node landing) and
/// the stored front.
inline DppReport dp_consistency_check(const ValueField& field, const ControlProblem& prob, const OrderingCone& cone,
                                      int slice, size_t node, int k_steps, double tau_mem = tol::mem) {
    const GridSpec& g = field.grid;
    if (slice + k_steps > g.n_time) throw contract_error("dp_consistency_check: k beyond horizon");
    Vec x = g.node_state(node);

    // Composite candidates: k-step snapped costs plus the stored fronts at
    // the landed nodes.
    std::vector<Vec> candidates;
    std::function<void(int, const Vec&, const Vec&)> rec = [&](int d, const Vec& xs, const Vec& acc) {
        if (d == k_steps) {
            for (const auto& y : field.front(slice + k_steps, g.nearest_node(xs)).points)
                candidates.push_back(acc + y);
            return;
        }
        for (const auto& u : prob.control_samples) {
            Vec z = xs, c = acc;
            detail::rk4_step(prob, g.h(), u, z, c);
            rec(d + 1, g.node_state(g.nearest_node(z)), c);
        }
    };
    rec(0, x, Vec::Zero(prob.cost_dim));

    std::vector<Vec> cloud = detail::snapped_cloud(prob, g, x, g.n_time - slice);
    PointCloud cloud_pc(prob.cost_dim, cloud);

    DppReport rep;
    for (const auto& c : candidates) rep.gap_candidates_in_cloud = std::max(rep.gap_candidates_in_cloud, cloud_pc.distance(c));
    for (const auto& y : cloud) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : candidates) best = std::min(best, cone.distance(y - c));
        rep.gap_cloud_in_candidates = std::max(rep.gap_cloud_in_candidates, best);
    }
    ParetoFront composite_front = minimal_elements(PointCloud(prob.cost_dim, candidates), cone, tau_mem);
    rep.gap_fronts = hausdorff(composite_front, field.front(slice, node), prob.cost_dim);
    return rep;
}

struct OscReport {
    double max_gap = 0.0;          // joint (time and state) neighbor gap
    double max_spatial_gap = 0.0;  // same-slice neighbors only
    int probes = 0;
};

/// Outer-semicontinuity probe: neighbor-slice/node front points must be close
/// to the local front + P, with a gap that shrinks under grid refinement.
inline OscReport outer_semicontinuity_probe(const ValueField& field, const OrderingCone& cone, int slice,
                                            size_t node) {
    const GridSpec& g = field.grid;
    Vec x = g.node_state(node);
    const auto& local = field.front(slice, node).points;
    OscReport rep;
    auto probe = [&](int s2, size_t n2, bool spatial) {
        for (const auto& y : field.front(s2, n2).points) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& f : local) best = std::min(best, cone.distance(y - f));
            rep.max_gap = std::max(rep.max_gap, best);
            if (spatial) rep.max_spatial_gap = std::max(rep.max_spatial_gap, best);
            ++rep.probes;
        }
    };
    for (int ds = -1; ds <= 1; ++ds) {
        int s2 = slice + ds;
        if (s2 < 0 || s2 > g.n_time) continue;
        for (size_t d = 0; d < g.nodes.size(); ++d) {
            for (int step : {-1, 1}) {
                Vec x2 = x;
                x2[static_cast<Eigen::Index>(d)] += step * g.spacing(static_cast<int>(d));
                if (x2[static_cast<Eigen::Index>(d)] < g.lo[static_cast<Eigen::Index>(d)] - 1e-12 ||
                    x2[static_cast<Eigen::Index>(d)] > g.hi[static_cast<Eigen::Index>(d)] + 1e-12)
                    continue;
                probe(s2, g.nearest_node(x2), ds == 0);
            }
        }
        if (ds != 0) probe(s2, node, false);
    }
    return rep;
}

/// The documented discretization budget: interpolation error propagated
/// through the cost estimate plus one-step cost resolution.
inline double default_tol_dpp(const ControlProblem& prob, const GridSpec& grid) {
    return 10.0 * grid.max_spacing() * (prob.K_L / prob.K_f) * std::exp(prob.K_f * prob.horizon) +
           10.0 * grid.h() * prob.M_L;
}

}  // namespace conedp
