// Acceptance suite: end-to-end checks of the solver, the cone constants, the
// randomized set-algebra properties, and the tangent/proximal estimators on
// the bundled problem files. Prints one PASS/FAIL line per criterion and
// exits with the number of failures.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "conedp/verify.hpp"

using namespace conedp;
namespace fs = std::filesystem;

namespace {

const fs::path problems_dir = CONEDP_PROBLEMS_DIR;
const std::string cli = CONEDP_CLI_PATH;

int failures = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail) {
    std::cout << (pass ? "PASS" : "FAIL") << " - criterion " << id << ": " << title;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
    if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(4);
    ss << v;
    return ss.str();
}

int run_cli(const std::string& args) {
    int rc = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- criterion 1: scalar reduction --------------------------------------

void criterion_scalar_reduction() {
    bool pass = true;
    std::string detail;
    for (const char* name : {"desk1d_lqr.json", "desk1d_decay.json", "desk1d_fuel.json"}) {
        auto t0 = std::chrono::steady_clock::now();
        ProblemConfig cfg = load_problem((problems_dir / name).string());
        ValueField field = backward_solve(cfg.problem, cfg.cone, cfg.grid, 1, cfg.tols.tau_mem);
        auto table = oracle::scalar_dp(cfg.problem, cfg.grid);
        double worst = 0.0;
        bool singletons = true;
        for (int s = 0; s <= cfg.grid.n_time; ++s)
            for (size_t j = 0; j < cfg.grid.node_count(); ++j) {
                if (field.front(s, j).size() != 1) singletons = false;
                worst = std::max(worst, std::abs(field.front(s, j).points[0][0] -
                                                 table.values[static_cast<size_t>(s)][j]));
            }
        double secs = seconds_since(t0);
        if (!singletons || worst > 1e-9 || secs >= 10.0) pass = false;
        detail += std::string(name) + " gap=" + fmt(worst) + " t=" + fmt(secs) + "s; ";
    }
    report(1, pass, "scalar reduction matches the scalar DP oracle at every node", detail);
}

// --- criterion 2: DP-equation oracle equality ----------------------------

void criterion_oracle_equality() {
    bool pass = true;
    std::string detail;
    for (const char* name : {"desk2d_a.json", "desk2d_b.json", "desk2d_c.json"}) {
        auto t0 = std::chrono::steady_clock::now();
        ProblemConfig cfg = load_problem((problems_dir / name).string());
        ValueField field = backward_solve(cfg.problem, cfg.cone, cfg.grid, 1, cfg.tols.tau_mem);
        double worst = 0.0;
        uint64_t seqs = 0;
        for (size_t j = 0; j < cfg.grid.node_count(); ++j) {
            auto res = oracle::enumerate_front(cfg.problem, cfg.cone, cfg.grid, 0, cfg.grid.node_state(j),
                                               oracle::Landing::nearest_node, cfg.enumeration_cap, cfg.tols.tau_mem);
            seqs = res.count;
            worst = std::max(worst, hausdorff(field.front(0, j), res.front, cfg.problem.cost_dim));
        }
        double secs = seconds_since(t0);
        if (worst > 1e-9 || secs >= 60.0) pass = false;
        detail += std::string(name) + " seq=" + std::to_string(seqs) + " gap=" + fmt(worst) + " t=" + fmt(secs) + "s; ";
    }
    report(2, pass, "solver fronts equal the exhaustive enumeration oracle", detail);
}

// --- criterion 3: Hausdorff-Lipschitz certificate -------------------------

void criterion_lipschitz() {
    bool pass = true;
    std::string detail;
    for (const char* name : {"desk2d_pair.json", "desk2d_pair2.json"}) {
        ProblemConfig cfg = load_problem((problems_dir / name).string());
        auto res = verify_lipschitz(cfg, 1000);
        if (!res.pass) pass = false;
        detail += std::string(name) + " M=" + fmt(res.report["constant"].get<double>()) +
                  " max_ratio=" + fmt(res.report["max_ratio"].get<double>()) +
                  " violations=" + std::to_string(res.report["violations"].get<int>()) + "; ";
    }
    report(3, pass, "minimal-element map is M(C,P)-Lipschitz over 1000 random K(C,P) pairs per cone pair", detail);
}

// --- criterion 4: cone constants ------------------------------------------

void criterion_cone_constants() {
    bool pass = true;
    std::string detail;
    std::vector<OrderingCone> cones;
    cones.push_back(orthant_cone(2));
    cones.emplace_back(2, std::vector<Vec>{make_vec({2, 1}), make_vec({1, 2})});
    cones.push_back(orthant_cone(3));
    for (const auto& P : cones) {
        double mu1 = P.deep_point(1.0).norm();
        for (double l : {0.5, 1.0, 2.0, 10.0}) {
            double dl = P.deep_point(l).norm();
            if (std::abs(dl - l * mu1) > 1e-6 * std::max(1.0, l * mu1)) pass = false;
            if (!(dl > l)) pass = false;
        }
    }
    double d1_orthant = orthant_cone(2).deep_point(1.0).norm();
    if (std::abs(d1_orthant - std::sqrt(2.0)) > 1e-6) pass = false;
    ConePair pair1(OrderingCone(2, {make_vec({2, 1}), make_vec({1, 2})}), orthant_cone(2));
    ConePair pair2(orthant_cone(2), OrderingCone(2, {make_vec({1.0, -0.2}), make_vec({-0.2, 1.0})}));
    for (const auto* pr : {&pair1, &pair2}) {
        double a = alpha(*pr);
        double ap = alpha_prime(*pr);
        if (!(a > 0.0) || !(ap > 1.0)) pass = false;
    }
    detail = "||d_1||(R^2_+)=" + fmt(d1_orthant) + " alpha(pair1)=" + fmt(alpha(pair1)) +
             " alpha(pair2)=" + fmt(alpha(pair2));
    report(4, pass, "deep-point scaling, ||d_l|| > l, alpha > 0, alpha' > 1", detail);
}

// --- criterion 5: external stability and sandwich lemma -------------------

void criterion_stability_sandwich() {
    std::mt19937_64 rng(20240809);
    OrderingCone P1 = orthant_cone(2);
    OrderingCone P2(2, {make_vec({2, 1}), make_vec({1, 2})});
    int stab_fail = 0, sand_fail = 0;
    const int trials = 10000;
    for (int k = 0; k < trials; ++k) {
        const OrderingCone& P = (k % 2 == 0) ? P1 : P2;
        PointCloud cloud = sampling::uniform_cloud(rng, 2, 24, -1.5, 1.5);
        ParetoFront f = minimal_elements(cloud, P);
        if (!is_externally_stable(cloud, f, P)) ++stab_fail;
    }
    std::uniform_int_distribution<size_t> size_pick(4, 20);
    for (int k = 0; k < trials; ++k) {
        const OrderingCone& P = (k % 2 == 0) ? P1 : P2;
        PointCloud k1 = sampling::uniform_cloud(rng, 2, static_cast<int>(size_pick(rng)), -1.0, 1.0);
        std::vector<Vec> pts = k1.points();
        std::uniform_int_distribution<size_t> pick(0, pts.size() - 1);
        for (int j = 0; j < 8; ++j) pts.push_back(k1[pick(rng)] + sampling::cone_point(rng, P, 0.5));
        auto rep = check_sandwich_lemma(k1, PointCloud(2, std::move(pts)), P);
        if (!rep.holds()) ++sand_fail;
    }
    report(5, stab_fail == 0 && sand_fail == 0, "external stability and sandwich lemma over 10^4 random trials each",
           "stability failures=" + std::to_string(stab_fail) + " sandwich failures=" + std::to_string(sand_fail));
}

// --- criterion 6: trajectory/cost/objective-space estimates ---------------

void criterion_estimates() {
    bool pass = true;
    std::string detail;
    for (const char* name : {"desk1d_lqr.json", "desk1d_decay.json", "desk1d_fuel.json", "desk2d_a.json",
                             "desk2d_b.json", "desk2d_c.json", "desk2d_pair.json", "desk2d_twostate.json"}) {
        ProblemConfig cfg = load_problem((problems_dir / name).string());
        auto res = verify_estimates(cfg, 100, 1e-6);
        if (!res.pass) {
            pass = false;
            detail += std::string(name) + " violated; ";
        }
    }
    if (detail.empty()) detail = "8 problems x 100 probes, zero violations beyond 1e-6";
    report(6, pass, "trajectory, cost, and objective-space estimates hold", detail);
}

// --- criterion 7: counterexample regressions ------------------------------

double ray_distance(const Vec& q, const Vec& origin, const Vec& dir) {
    double t = std::max(0.0, dir.dot(q - origin) / dir.squaredNorm());
    return (q - origin - t * dir).norm();
}

double parabola_arc_distance(const Vec& q) {
    // Distance to {(a, a^2) : a in [-3, 0]} by scan plus ternary refinement.
    double best = std::numeric_limits<double>::infinity(), best_a = 0.0;
    for (int k = 0; k <= 800; ++k) {
        double a = -3.0 * k / 800.0;
        double d = (q - make_vec({a, a * a})).norm();
        if (d < best) {
            best = d;
            best_a = a;
        }
    }
    double a0 = std::max(-3.0, best_a - 0.005), a1 = std::min(0.0, best_a + 0.005);
    for (int pass = 0; pass < 60; ++pass) {
        double m1 = a0 + (a1 - a0) / 3.0, m2 = a1 - (a1 - a0) / 3.0;
        if ((q - make_vec({m1, m1 * m1})).norm() < (q - make_vec({m2, m2 * m2})).norm()) a1 = m2;
        else a0 = m1;
    }
    double am = 0.5 * (a0 + a1);
    return std::min(best, (q - make_vec({am, am * am})).norm());
}

SetProbe kinked_probe() {
    SetProbe p;
    p.dim = 2;
    p.dist = [](const Vec& q) {
        double d2 = (q[0] >= 0.0 && q[0] + q[1] >= 0.0)
                        ? 0.0
                        : std::min(ray_distance(q, make_vec({0.0, 0.0}), make_vec({0.0, 1.0})),
                                   ray_distance(q, make_vec({0.0, 0.0}), make_vec({1.0, -1.0})));
        double d1 = (q[1] >= 0.0 && q[0] >= -std::sqrt(q[1]))
                        ? 0.0
                        : std::min(parabola_arc_distance(q),
                                   ray_distance(q, make_vec({0.0, 0.0}), make_vec({1.0, 0.0})));
        return std::min(d1, d2);
    };
    return p;
}

void criterion_counterexamples() {
    bool pass = true;
    std::string detail;

    SetMapSampler cbrt_map;
    cbrt_map.domain_dim = 1;
    cbrt_map.range_dim = 1;
    cbrt_map.evaluate = [](const Vec& x) { return PointCloud::single(make_vec({std::cbrt(x[0])})); };
    PointCloud d1 = contingent_derivative_estimate(cbrt_map, make_vec({0.0}), make_vec({0.0}), make_vec({1.0}),
                                                   Ladder{}, w_grid(1, 5.0, 50));
    if (!d1.empty()) {
        pass = false;
        detail += "cube-root derivative not empty; ";
    }

    SetProbe probe = kinked_probe();
    ConeEstimate est = contingent_cone_estimate(probe, make_vec({0.0, 0.0}), Ladder{}, 720);
    int misclassified = 0;
    for (size_t i = 0; i < est.directions.size(); ++i) {
        double angle = std::atan2(est.directions[i][1], est.directions[i][0]) * 180.0 / M_PI;
        bool in_true = angle >= -45.0 - 1e-9;
        bool band = std::abs(angle + 45.0) <= 1.0 || angle >= 179.0 || angle <= -179.0;
        if (band) continue;
        if ((est.inside[i] != 0) != in_true) ++misclassified;
    }
    if (misclassified != 0) {
        pass = false;
        detail += "tangent misclassifications=" + std::to_string(misclassified) + "; ";
    }
    Minimality cls = properly_minimal(probe, make_vec({0.0, 0.0}), orthant_cone(2));
    if (cls != Minimality::minimal_not_proper) {
        pass = false;
        detail += "kinked origin not classified minimal-not-proper; ";
    }
    if (detail.empty())
        detail = "cube-root derivative empty at v=1; kinked set minimal-not-proper, 0 misclassified at 720 angles";
    report(7, pass, "counterexample regressions (cube-root map, kinked set)", detail);
}

// --- criteria 8 and 9: contingent and proximal residual sweeps ------------

void criteria_residuals() {
    bool pass8 = true, pass9 = true;
    std::string detail8, detail9;
    for (const char* name : {"desk2d_a.json", "desk2d_b.json", "desk2d_c.json"}) {
        ProblemConfig cfg = load_problem((problems_dir / name).string());
        ValueField field = backward_solve(cfg.problem, cfg.cone, cfg.grid, 1, cfg.tols.tau_mem);

        auto cont = verify_contingent(cfg, field, 150);
        double frac = cont.report["fraction"].get<double>();
        bool traces_ok = true;
        for (const auto& f : cont.report["failures"])
            if (f["ladder_trace_cond1"].empty() && f["ladder_trace_cond2"].empty()) traces_ok = false;
        if (!cont.pass || !traces_ok) pass8 = false;
        detail8 += std::string(name) + " frac=" + fmt(frac) + "; ";

        auto prox = verify_proximal(cfg, field, 30);
        double pol = prox.report["max_polarity"].get<double>();
        int with_normals = prox.report["points_with_normals"].get<int>();
        if (with_normals == 0 || pol > 1e-8) pass9 = false;
        detail9 += std::string(name) + " normals_at=" + std::to_string(with_normals) + " max_polarity=" + fmt(pol) + "; ";
    }
    report(8, pass8, "contingent membership residuals hold at >= 95% of sampled (t,x,y)", detail8);
    report(9, pass9, "all recovered proximal normals satisfy tangent polarity within 1e-8", detail9);
}

// --- criterion 10: determinism --------------------------------------------

void criterion_determinism() {
    fs::path base = fs::path("acceptance_tmp");
    fs::remove_all(base);
    fs::create_directories(base);
    bool pass = true;
    std::string detail;
    auto hash_dir = [](const fs::path& dir) {
        uint64_t h = 1469598103934665603ULL;
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(dir))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::string bytes = f.filename().string() + slurp(f);
            for (unsigned char c : bytes) {
                h ^= c;
                h *= 1099511628211ULL;
            }
        }
        return h;
    };
    for (const char* name : {"desk2d_a.json", "desk2d_c.json"}) {
        fs::path p1 = base / (std::string("s1_") + name), p2 = base / (std::string("s2_") + name);
        if (run_cli("solve " + (problems_dir / name).string() + " --out " + p1.string() + " --jobs 4") != 0)
            pass = false;
        if (run_cli("solve " + (problems_dir / name).string() + " --out " + p2.string()) != 0) pass = false;
        if (hash_dir(p1) != hash_dir(p2)) {
            pass = false;
            detail += std::string(name) + " solve differs; ";
        }
        fs::path o1 = base / (std::string("o1_") + name), o2 = base / (std::string("o2_") + name);
        if (run_cli("oracle " + (problems_dir / name).string() + " --out " + o1.string()) != 0) pass = false;
        if (run_cli("oracle " + (problems_dir / name).string() + " --out " + o2.string()) != 0) pass = false;
        if (hash_dir(o1) != hash_dir(o2)) {
            pass = false;
            detail += std::string(name) + " oracle differs; ";
        }
    }
    if (detail.empty()) detail = "solve and oracle artifacts byte-identical across reruns";
    report(10, pass, "fixed seeds produce byte-identical CSV/JSON artifacts", detail);
}

}  // namespace

int main() {
    std::cout << "acceptance suite (" << tool_version << ")\n";
    criterion_scalar_reduction();
    criterion_oracle_equality();
    criterion_lipschitz();
    criterion_cone_constants();
    criterion_stability_sandwich();
    criterion_estimates();
    criterion_counterexamples();
    criteria_residuals();
    criterion_determinism();
    std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES: " + std::to_string(failures)) << std::endl;
    return failures;
}
