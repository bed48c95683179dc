#pragma once

#include "conedp/problem_io.hpp"
#include "conedp/tangent.hpp"

namespace conedp {

/// Outcome of one verification command: machine-readable report plus a flag.
struct VerifyResult {
    bool pass = false;
    json report;
};

/// Props 2.1/2.2 and the objective-space corollary on randomized probes.
inline VerifyResult verify_estimates(const ProblemConfig& cfg, int n_probes = 100, double tau = 1e-6) {
    const ControlProblem& p = cfg.problem;
    const GridSpec& g = cfg.grid;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(p.control_samples.size()) - 1);
    std::uniform_int_distribution<int> step(0, g.n_time - 1);

    double worst_traj = -std::numeric_limits<double>::infinity();
    double worst_cost = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n_probes; ++k) {
        std::vector<int> row;
        for (int s = 0; s < g.n_time; ++s) row.push_back(pick(rng));
        Vec x1 = sampling::uniform_box(rng, g.lo, g.hi);
        Vec x2 = sampling::uniform_box(rng, g.lo, g.hi);
        ControlSequence seq{0, row};
        worst_traj = std::max(worst_traj, check_trajectory_estimate(p, g.h(), x1, x2, seq).max_violation);
        worst_cost = std::max(worst_cost,
                              check_cost_estimate(p, g.h(), g.n_time, step(rng), step(rng), x1, x2, row).max_violation);
    }

    // Objective-space estimate on enumerable pairs.
    double worst_objspace = -std::numeric_limits<double>::infinity();
    int pairs = 0;
    double log_count = g.n_time * std::log(static_cast<double>(p.control_samples.size()));
    if (log_count <= std::log(2e5)) {
        for (int k = 0; k < 10; ++k) {
            Vec x1 = sampling::uniform_box(rng, g.lo, g.hi);
            Vec x2 = sampling::uniform_box(rng, g.lo, g.hi);
            auto y1 = objective_cloud(p, g.h(), g.n_time, x1);
            auto y2 = objective_cloud(p, g.h(), g.n_time, x2);
            double bound = p.K_L / p.K_f * std::exp(p.K_f * p.horizon) * (x1 - x2).norm();
            for (const auto& c : y1.cloud.points())
                worst_objspace = std::max(worst_objspace, y2.cloud.distance(c) - bound);
            for (const auto& c : y2.cloud.points())
                worst_objspace = std::max(worst_objspace, y1.cloud.distance(c) - bound);
            ++pairs;
        }
    }

    VerifyResult res;
    res.report["check"] = "estimates";
    res.report["seed"] = cfg.seed;
    res.report["n_probes"] = n_probes;
    res.report["max_violation_trajectory"] = worst_traj;
    res.report["max_violation_cost"] = worst_cost;
    res.report["objective_space_pairs"] = pairs;
    res.report["max_violation_objective_space"] = pairs > 0 ? worst_objspace : 0.0;
    res.report["tolerance"] = tau;
    res.pass = worst_traj <= tau && worst_cost <= tau && (pairs == 0 || worst_objspace <= tau);
    return res;
}

/// DP-equation checks: oracle front equality at query states (nearest-node
/// landing) plus k-step consistency gaps at sampled nodes.
inline VerifyResult verify_dpp(const ProblemConfig& cfg, const ValueField& field) {
    const ControlProblem& p = cfg.problem;
    const GridSpec& g = field.grid;
    VerifyResult res;
    res.report["check"] = "dpp";
    res.report["seed"] = cfg.seed;
    double tol_oracle = 1e-9;
    double tol_dpp = cfg.tols.tol_dpp.value_or(default_tol_dpp(p, g));
    res.report["tol_oracle"] = tol_oracle;
    res.report["tol_dpp"] = tol_dpp;

    bool pass = true;
    json queries = json::array();
    std::vector<Vec> qs = cfg.query_states;
    if (qs.empty()) qs.push_back(0.5 * (g.lo + g.hi));
    for (const auto& q : qs) {
        size_t node = g.nearest_node(q);
        json entry;
        entry["node"] = node;
        entry["state"] = to_std(g.node_state(node));
        double log_count = g.n_time * std::log(static_cast<double>(p.control_samples.size()));
        if (g.interp == Interp::nearest && log_count <= std::log(static_cast<double>(cfg.enumeration_cap))) {
            auto oracle_res =
                oracle::enumerate_front(p, cfg.cone, g, 0, g.node_state(node), oracle::Landing::nearest_node,
                                        cfg.enumeration_cap, cfg.tols.tau_mem);
            double gap = hausdorff(field.front(0, node), oracle_res.front, p.cost_dim);
            entry["oracle_gap"] = gap;
            entry["oracle_sequences"] = oracle_res.count;
            if (gap > tol_oracle) pass = false;
        }
        auto rep1 = dp_consistency_check(field, p, cfg.cone, 0, node, std::min(2, g.n_time), cfg.tols.tau_mem);
        entry["k_step_gap_candidates_in_cloud"] = rep1.gap_candidates_in_cloud;
        entry["k_step_gap_cloud_in_candidates"] = rep1.gap_cloud_in_candidates;
        entry["k_step_gap_fronts"] = rep1.gap_fronts;
        if (!rep1.ok(tol_dpp)) pass = false;
        queries.push_back(entry);
    }
    res.report["queries"] = queries;
    res.pass = pass;
    return res;
}

/// Contingent-solution residuals sampled over the field: the fraction of
/// (t, x, y) triples satisfying both membership conditions must reach 95%.
inline VerifyResult verify_contingent(const ProblemConfig& cfg, const ValueField& field, int max_triples = 200) {
    const GridSpec& g = field.grid;
    double tol_tan = cfg.tols.tol_tan.value_or(default_tol_tan(cfg.problem, g));
    int ok = 0, total = 0;
    json failures = json::array();
    size_t node_stride = std::max<size_t>(1, g.node_count() / 12);
    for (int slice = 1; slice < g.n_time && total < max_triples; ++slice) {
        for (size_t node = 0; node < g.node_count() && total < max_triples; node += node_stride) {
            for (const auto& y : field.front(slice, node).points) {
                if (total >= max_triples) break;
                auto rep = contingent_solution_residual(field, cfg.problem, cfg.cone, slice, node, y, tol_tan,
                                                        {1, 2, 4}, 24, cfg.seed);
                ++total;
                if (rep.cond1_ok && rep.cond2_ok) {
                    ++ok;
                } else if (failures.size() < 20) {
                    json f;
                    f["slice"] = slice;
                    f["node"] = node;
                    f["y"] = to_std(y);
                    f["res1"] = rep.res1;
                    f["res2"] = rep.res2;
                    json ladder1 = json::array(), ladder2 = json::array();
                    for (const auto& t : rep.trace1) ladder1.push_back({{"tau", t.tau}, {"dist_rate", t.dist}});
                    for (const auto& t : rep.trace2) ladder2.push_back({{"tau", t.tau}, {"dist_rate", t.dist}});
                    f["ladder_trace_cond1"] = ladder1;
                    f["ladder_trace_cond2"] = ladder2;
                    failures.push_back(f);
                }
            }
        }
    }
    VerifyResult res;
    res.report["check"] = "contingent";
    res.report["seed"] = cfg.seed;
    res.report["ladder_rung_steps"] = {1, 2, 4};
    res.report["tol_tan"] = tol_tan;
    res.report["note"] = "closedness of E(cl(S),-P) (reformulation hypothesis 4) is not checkable from samples";
    res.report["triples"] = total;
    res.report["satisfied"] = ok;
    res.report["fraction"] = total > 0 ? static_cast<double>(ok) / total : 1.0;
    res.report["failures"] = failures;
    res.pass = total > 0 && ok >= static_cast<int>(std::ceil(0.95 * total));
    return res;
}

/// Proximal residuals: recovered normals must satisfy polarity against the
/// estimated tangents (hard 1e-8) and the Hamiltonian residual within the
/// grid budget; boundary-condition gaps are reported alongside.
inline VerifyResult verify_proximal(const ProblemConfig& cfg, const ValueField& field, int max_points = 40) {
    const GridSpec& g = field.grid;
    double tol_prox = cfg.tols.tol_prox.value_or(default_tol_tan(cfg.problem, g));
    VerifyResult res;
    res.report["check"] = "proximal";
    res.report["seed"] = cfg.seed;
    res.report["tol_prox"] = tol_prox;
    double max_resid = 0.0, max_pol = -std::numeric_limits<double>::infinity();
    int points = 0, with_normals = 0, total_normals = 0, ambiguous = 0;
    size_t node_stride = std::max<size_t>(1, g.node_count() / 8);
    for (int slice = 1; slice < g.n_time && points < max_points; ++slice) {
        for (size_t node = 0; node < g.node_count() && points < max_points; node += node_stride) {
            for (const auto& y : field.front(slice, node).points) {
                if (points >= max_points) break;
                ++points;
                auto rep = proximal_residual(field, cfg.problem, cfg.cone, slice, node, y, 64, 24, cfg.seed);
                if (!rep.normals_found()) continue;
                ++with_normals;
                total_normals += static_cast<int>(rep.normals.size());
                for (const auto& n : rep.normals) ambiguous += n.ambiguous ? 1 : 0;
                max_resid = std::max(max_resid, rep.max_residual);
                max_pol = std::max(max_pol, rep.max_polarity);
            }
        }
    }
    res.report["points"] = points;
    res.report["points_with_normals"] = with_normals;
    res.report["normals"] = total_normals;
    res.report["ambiguous_normals"] = ambiguous;
    res.report["max_residual"] = max_resid;
    res.report["max_polarity"] = with_normals > 0 ? max_pol : 0.0;
    json boundary = json::array();
    size_t mid = g.nearest_node(0.5 * (g.lo + g.hi));
    auto brep = boundary_condition_probe(field, cfg.cone, mid);
    boundary.push_back({{"node", mid}, {"gap_t0", brep.gap_t0}, {"gap_T", brep.gap_T}});
    res.report["boundary"] = boundary;
    res.pass = with_normals > 0 && max_pol <= 1e-8 && max_resid <= tol_prox;
    return res;
}

/// Hausdorff-Lipschitz certificate of the minimal-element map over randomized
/// pairs in K(C,P). Requires the outer cone C.
inline VerifyResult verify_lipschitz(const ProblemConfig& cfg, int n_pairs = 1000) {
    if (!cfg.cone_outer) throw schema_error("cone C required for the lipschitz check (set cone_outer)");
    ConePair pair(cfg.cone, *cfg.cone_outer);
    std::mt19937_64 rng(cfg.seed);
    double M = lipschitz_constant(pair);
    double max_ratio = 0.0;
    int violations = 0;
    for (int k = 0; k < n_pairs; ++k) {
        PointCloud k1 = sampling::kcp_cloud(rng, pair, 8, 42);
        PointCloud k2 = sampling::kcp_cloud(rng, pair, 8, 42);
        auto rep = lipschitz_certificate(k1, k2, pair, cfg.tols.tau_mem);
        if (!rep.satisfied) ++violations;
        if (rep.h_inputs > 1e-12) max_ratio = std::max(max_ratio, rep.h_fronts / rep.h_inputs);
    }
    VerifyResult res;
    res.report["check"] = "lipschitz";
    res.report["seed"] = cfg.seed;
    res.report["pairs"] = n_pairs;
    res.report["constant"] = M;
    res.report["alpha"] = alpha(pair);
    res.report["mu_outer"] = pair.outer().mu();
    res.report["max_ratio"] = max_ratio;
    res.report["violations"] = violations;
    res.pass = violations == 0;
    return res;
}

}  // namespace conedp
