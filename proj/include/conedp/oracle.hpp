#pragma once

#include <chrono>

#include "conedp/dp.hpp"

namespace conedp {
namespace oracle {

enum class Landing { continuous, nearest_node };

/// Result of exhaustive control-sequence enumeration: the exact discrete
/// objective cloud and its Pareto front. The oracle stays deliberately dumb:
/// no pruning, shared integrator, canonical sort via PointCloud.
struct EnumerationResult {
    uint64_t count = 0;
    PointCloud cloud;
    ParetoFront front;
    double wall_seconds = 0.0;
};

/// Enumerates every piecewise-constant control sequence over the remaining
/// steps from state x at time slice `slice`. With Landing::nearest_node each
/// step snaps to the lattice, reproducing the solver's discrete process.
inline EnumerationResult enumerate_front(const ControlProblem& prob, const OrderingCone& cone, const GridSpec& grid,
                                         int slice, const Vec& x, Landing landing = Landing::continuous,
                                         uint64_t cap = 1000000, double tau_mem = tol::mem) {
    const int steps = grid.n_time - slice;
    if (steps < 0) throw contract_error("enumerate_front: slice beyond horizon");
    const size_t n_u = prob.control_samples.size();
    double log_count = steps * std::log(static_cast<double>(n_u));
    if (log_count > std::log(static_cast<double>(cap)) + 1e-12)
        throw contract_error("enumerate_front: sequence count exceeds cap");

    auto t0 = std::chrono::steady_clock::now();
    std::vector<Vec> costs;
    std::function<void(int, const Vec&, const Vec&)> rec = [&](int depth, const Vec& xs, const Vec& acc) {
        if (depth == steps) {
            costs.push_back(acc);
            return;
        }
        for (size_t j = 0; j < n_u; ++j) {
            Vec z = xs, c = acc;
            detail::rk4_step(prob, grid.h(), prob.control_samples[j], z, c);
            if (landing == Landing::nearest_node) z = grid.node_state(grid.nearest_node(z));
            rec(depth + 1, z, c);
        }
    };
    rec(0, x, Vec::Zero(prob.cost_dim));

    EnumerationResult res;
    res.count = costs.size();
    res.cloud = PointCloud(prob.cost_dim, std::move(costs));
    res.front = minimal_elements(res.cloud, cone, tau_mem);
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

/// Classical scalar value iteration on the identical grid and interpolation
/// as the solver's nearest-node mode. Only valid for cost dimension 1.
struct ScalarTable {
    GridSpec grid;
    std::vector<std::vector<double>> values;  // [slice][node]
};

inline ScalarTable scalar_dp(const ControlProblem& prob, const GridSpec& grid) {
    if (prob.cost_dim != 1) throw contract_error("scalar_dp: cost dimension must be 1");
    prob.validate();
    grid.validate(prob.state_dim);
    ScalarTable table;
    table.grid = grid;
    const size_t n_nodes = grid.node_count();
    table.values.assign(static_cast<size_t>(grid.n_time) + 1, std::vector<double>(n_nodes, 0.0));
    for (int slice = grid.n_time - 1; slice >= 0; --slice) {
        for (size_t j = 0; j < n_nodes; ++j) {
            Vec x = grid.node_state(j);
            double best = std::numeric_limits<double>::infinity();
            for (const auto& u : prob.control_samples) {
                Vec z = x, c = Vec::Zero(1);
                detail::rk4_step(prob, grid.h(), u, z, c);
                double v = c[0] + table.values[static_cast<size_t>(slice) + 1][grid.nearest_node(z)];
                best = std::min(best, v);
            }
            table.values[static_cast<size_t>(slice)][j] = best;
        }
    }
    return table;
}

}  // namespace oracle
}  // namespace conedp
