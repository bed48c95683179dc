#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

#include "conedp/pareto.hpp"
#include "conedp/types.hpp"

namespace conedp {

/// An autonomous control problem on a fixed horizon: dynamics f(x,u), vector
/// running cost L(x,u), a finite sample of the compact control set, and the
/// declared bound/Lipschitz constants. The constants are trusted inputs;
/// spot_check_constants verifies them empirically on random probes.
struct ControlProblem {
    int state_dim = 0;
    int control_dim = 0;
    int cost_dim = 0;
    double horizon = 0.0;
    std::function<Vec(const Vec&, const Vec&)> dynamics;
    std::function<Vec(const Vec&, const Vec&)> running_cost;
    std::vector<Vec> control_samples;
    double K_f = 0.0, M_f = 0.0, K_L = 0.0, M_L = 0.0;

    void validate() const {
        if (state_dim < 1 || cost_dim < 1 || control_dim < 1) throw contract_error("problem dimensions must be >= 1");
        if (!(horizon > 0.0)) throw contract_error("horizon must be positive");
        if (control_samples.empty()) throw contract_error("control sample set is empty");
        for (const auto& u : control_samples)
            if (u.size() != control_dim) throw contract_error("control sample dimension mismatch");
        if (!(K_f > 0.0)) throw contract_error("K_f must be declared positive");
        if (!(M_f > 0.0) || M_L < 0.0 || K_L < 0.0) throw contract_error("invalid bound constants");
        if (!dynamics || !running_cost) throw contract_error("dynamics/cost not set");
    }
};

/// Piecewise-constant control on the uniform time grid: control sample
/// indices for steps [start_step, start_step + indices.size()).
struct ControlSequence {
    int start_step = 0;
    std::vector<int> indices;
};

struct IntegrationResult {
    std::vector<Vec> states;  // states at grid times start..end (inclusive)
    Vec cost;                 // accumulated vector cost
};

namespace detail {

/// One classical RK4 step of the dynamics with the cost integrated on the
/// same quadrature (Simpson weights), so cost and state share the grid.
inline void rk4_step(const ControlProblem& prob, double h, const Vec& u, Vec& x, Vec& cost) {
    Vec k1 = prob.dynamics(x, u), l1 = prob.running_cost(x, u);
    Vec x2 = x + 0.5 * h * k1;
    Vec k2 = prob.dynamics(x2, u), l2 = prob.running_cost(x2, u);
    Vec x3 = x + 0.5 * h * k2;
    Vec k3 = prob.dynamics(x3, u), l3 = prob.running_cost(x3, u);
    Vec x4 = x + h * k3;
    Vec k4 = prob.dynamics(x4, u), l4 = prob.running_cost(x4, u);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    cost += (h / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    if (!x.allFinite() || !cost.allFinite()) throw numeric_error("integration produced NaN/inf");
}

}  // namespace detail

/// Integrates the trajectory and its vector cost from state x0 over the steps
/// covered by seq, with fixed step h.
inline IntegrationResult integrate(const ControlProblem& prob, double h, const Vec& x0,
                                   const ControlSequence& seq) {
    if (x0.size() != prob.state_dim) throw contract_error("integrate: state dimension mismatch");
    IntegrationResult res;
    res.states.push_back(x0);
    res.cost = Vec::Zero(prob.cost_dim);
    Vec x = x0;
    for (int idx : seq.indices) {
        if (idx < 0 || idx >= static_cast<int>(prob.control_samples.size()))
            throw contract_error("integrate: control index out of range");
        detail::rk4_step(prob, h, prob.control_samples[static_cast<size_t>(idx)], x, res.cost);
        res.states.push_back(x);
    }
    return res;
}

struct EstimateReport {
    double max_violation = 0.0;  // max over probes of (observed - bound)
    double max_observed = 0.0;
    double bound = 0.0;
    bool ok(double tau = 1e-6) const { return max_violation <= tau; }
};

/// Gronwall estimate between trajectories started at x1 and x2 with the same
/// control sequence: ||x(s;x1) - x(s;x2)|| <= exp(K_f (s-t)) ||x1 - x2||.
inline EstimateReport check_trajectory_estimate(const ControlProblem& prob, double h, const Vec& x1, const Vec& x2,
                                                const ControlSequence& seq) {
    IntegrationResult a = integrate(prob, h, x1, seq);
    IntegrationResult b = integrate(prob, h, x2, seq);
    EstimateReport rep;
    double d0 = (x1 - x2).norm();
    for (size_t k = 0; k < a.states.size(); ++k) {
        double gap = (a.states[k] - b.states[k]).norm();
        double bound = std::exp(prob.K_f * h * static_cast<double>(k)) * d0;
        rep.max_observed = std::max(rep.max_observed, gap);
        rep.bound = std::max(rep.bound, bound);
        rep.max_violation = std::max(rep.max_violation, gap - bound);
    }
    return rep;
}

/// Cost estimate: ||J(t1,T,x1,u) - J(t2,T,x2,u)|| bounded by
/// (K_L/K_f) exp(K_f T) ||x1-x2|| + M_L |t1-t2|. Steps k1, k2 are the start
/// steps on the shared control grid (controls indexed by absolute step).
inline EstimateReport check_cost_estimate(const ControlProblem& prob, double h, int n_steps, int k1, int k2,
                                          const Vec& x1, const Vec& x2, const std::vector<int>& controls) {
    if (static_cast<int>(controls.size()) != n_steps) throw contract_error("check_cost_estimate: control row size");
    auto tail = [&](int k0, const Vec& x0) {
        ControlSequence seq{k0, std::vector<int>(controls.begin() + k0, controls.end())};
        return integrate(prob, h, x0, seq).cost;
    };
    Vec j1 = tail(k1, x1);
    Vec j2 = tail(k2, x2);
    EstimateReport rep;
    rep.max_observed = (j1 - j2).norm();
    rep.bound = prob.K_L / prob.K_f * std::exp(prob.K_f * prob.horizon) * (x1 - x2).norm() +
                prob.M_L * h * std::abs(k1 - k2);
    rep.max_violation = rep.max_observed - rep.bound;
    return rep;
}

struct ObjectiveCloud {
    PointCloud cloud;
    bool exhaustive = false;
    uint64_t sequences = 0;
};

/// The sampled objective space Y(t,x): costs of all control sequences over
/// the remaining steps when |U|^steps fits under the cap, otherwise n_mc
/// random sequences (requires allow_sampling).
inline ObjectiveCloud objective_cloud(const ControlProblem& prob, double h, int remaining_steps, const Vec& x,
                                      uint64_t cap = 1000000, bool allow_sampling = false, int n_mc = 4096,
                                      uint64_t seed = 1234) {
    const size_t n_u = prob.control_samples.size();
    double log_count = remaining_steps * std::log(static_cast<double>(n_u));
    bool fits = log_count <= std::log(static_cast<double>(cap)) + 1e-12;
    ObjectiveCloud out;
    std::vector<Vec> costs;
    if (fits) {
        // Depth-first enumeration sharing prefix integrations.
        std::function<void(int, const Vec&, const Vec&)> rec = [&](int depth, const Vec& xs, const Vec& acc) {
            if (depth == remaining_steps) {
                costs.push_back(acc);
                return;
            }
            for (size_t j = 0; j < n_u; ++j) {
                Vec xn = xs, cn = acc;
                detail::rk4_step(prob, h, prob.control_samples[j], xn, cn);
                rec(depth + 1, xn, cn);
            }
        };
        rec(0, x, Vec::Zero(prob.cost_dim));
        out.exhaustive = true;
        out.sequences = costs.size();
    } else {
        if (!allow_sampling)
            throw contract_error("objective_cloud: enumeration cap exceeded and sampling disabled");
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<size_t> pick(0, n_u - 1);
        for (int k = 0; k < n_mc; ++k) {
            Vec xs = x, acc = Vec::Zero(prob.cost_dim);
            for (int s = 0; s < remaining_steps; ++s)
                detail::rk4_step(prob, h, prob.control_samples[pick(rng)], xs, acc);
            costs.push_back(acc);
        }
        out.exhaustive = false;
        out.sequences = static_cast<uint64_t>(n_mc);
    }
    out.cloud = PointCloud(prob.cost_dim, std::move(costs));
    return out;
}

struct ConstantCheckReport {
    double max_f_norm = 0.0, max_L_norm = 0.0;
    double max_f_ratio = 0.0, max_L_ratio = 0.0;
    bool ok = true;
};

/// Empirical spot check of the declared constants over random probes in the
/// given state box. A violation is a configuration error.
inline ConstantCheckReport spot_check_constants(const ControlProblem& prob, const Vec& lo, const Vec& hi,
                                                int n_probes = 200, uint64_t seed = 77) {
    std::mt19937_64 rng(seed);
    auto rand_x = [&]() {
        Vec x(prob.state_dim);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            std::uniform_real_distribution<double> u(lo[i], hi[i]);
            x[i] = u(rng);
        }
        return x;
    };
    ConstantCheckReport rep;
    for (int k = 0; k < n_probes; ++k) {
        Vec x1 = rand_x(), x2 = rand_x();
        for (const auto& u : prob.control_samples) {
            rep.max_f_norm = std::max(rep.max_f_norm, prob.dynamics(x1, u).norm());
            rep.max_L_norm = std::max(rep.max_L_norm, prob.running_cost(x1, u).norm());
            double dx = (x1 - x2).norm();
            if (dx > 1e-9) {
                rep.max_f_ratio = std::max(rep.max_f_ratio, (prob.dynamics(x1, u) - prob.dynamics(x2, u)).norm() / dx);
                rep.max_L_ratio =
                    std::max(rep.max_L_ratio, (prob.running_cost(x1, u) - prob.running_cost(x2, u)).norm() / dx);
            }
        }
    }
    rep.ok = rep.max_f_norm <= prob.M_f * (1.0 + 1e-9) && rep.max_L_norm <= prob.M_L + 1e-12 &&
             rep.max_f_ratio <= prob.K_f * (1.0 + 1e-9) + 1e-12 && rep.max_L_ratio <= prob.K_L * (1.0 + 1e-9) + 1e-12;
    return rep;
}

}  // namespace conedp
