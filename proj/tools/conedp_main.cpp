// conedp: set-valued dynamic programming for cone-ordered multiobjective
// optimal control. Subcommands: solve, verify, oracle, info.
//
// Exit codes: 0 success, 2 schema/configuration error, 3 numeric failure,
// 4 verification violation, 5 problem-hash mismatch, 6 enumeration cap.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "conedp/verify.hpp"

namespace fs = std::filesystem;
using namespace conedp;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_schema = 2;
constexpr int exit_numeric = 3;
constexpr int exit_violation = 4;
constexpr int exit_hash = 5;
constexpr int exit_cap = 6;

void write_json(const fs::path& path, const json& j) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

int cmd_solve(const std::string& problem_path, const std::string& out_dir, int jobs) {
    ProblemConfig cfg = load_problem(problem_path);
    ValueField field = backward_solve(cfg.problem, cfg.cone, cfg.grid, jobs, cfg.tols.tau_mem);
    export_field(field, cfg.cone, cfg.hash_hex, out_dir);
    std::cout << "solved " << cfg.name << ": " << (cfg.grid.n_time + 1) << " slices, " << cfg.grid.node_count()
              << " nodes, hash " << cfg.hash_hex << "\n";
    return exit_ok;
}

int cmd_verify(const std::string& problem_path, const std::string& field_dir, const std::string& which,
               const std::string& report_path) {
    ProblemConfig cfg = load_problem(problem_path);
    VerifyResult res;
    if (which == "estimates" || which == "lipschitz") {
        res = (which == "estimates") ? verify_estimates(cfg) : verify_lipschitz(cfg);
    } else {
        if (field_dir.empty()) throw schema_error("--field DIR required for this check");
        LoadedField lf = import_field(field_dir, cfg.tols.tau_mem);
        if (lf.problem_hash != cfg.hash_hex) {
            std::cerr << "error: field was solved from a different problem (hash " << lf.problem_hash
                      << " != " << cfg.hash_hex << ")\n";
            return exit_hash;
        }
        if (which == "dpp") res = verify_dpp(cfg, lf.field);
        else if (which == "contingent") res = verify_contingent(cfg, lf.field);
        else if (which == "proximal") res = verify_proximal(cfg, lf.field);
        else throw schema_error("unknown check '" + which + "'");
    }
    res.report["problem"] = cfg.name;
    res.report["problem_hash"] = cfg.hash_hex;
    res.report["tool_version"] = tool_version;
    res.report["pass"] = res.pass;
    if (!report_path.empty()) write_json(report_path, res.report);
    std::cout << res.report.dump(2) << "\n";
    if (!res.pass) {
        std::cerr << "verification failed: " << which << "\n";
        return exit_violation;
    }
    return exit_ok;
}

int cmd_oracle(const std::string& problem_path, const std::string& out_dir, bool scalar,
               const std::string& landing_name) {
    ProblemConfig cfg = load_problem(problem_path);
    fs::create_directories(out_dir);
    if (scalar) {
        if (cfg.problem.cost_dim != 1) throw schema_error("--scalar requires a problem with cost_dim 1");
        auto table = oracle::scalar_dp(cfg.problem, cfg.grid);
        std::ofstream out(fs::path(out_dir) / "scalar_dp.csv");
        for (int s = 0; s <= cfg.grid.n_time; ++s)
            for (size_t j = 0; j < cfg.grid.node_count(); ++j) {
                Vec x = cfg.grid.node_state(j);
                out << s << "," << j;
                for (Eigen::Index i = 0; i < x.size(); ++i) out << "," << fmt_double(x[i]);
                out << "," << fmt_double(table.values[static_cast<size_t>(s)][j]) << "\n";
            }
    }
    oracle::Landing landing =
        landing_name == "continuous" ? oracle::Landing::continuous : oracle::Landing::nearest_node;
    std::vector<Vec> qs = cfg.query_states;
    if (qs.empty()) qs.push_back(0.5 * (cfg.grid.lo + cfg.grid.hi));
    json summary;
    summary["problem"] = cfg.name;
    summary["problem_hash"] = cfg.hash_hex;
    summary["tool_version"] = tool_version;
    summary["landing"] = landing == oracle::Landing::continuous ? "continuous" : "nearest_node";
    json entries = json::array();
    int qi = 0;
    for (const auto& q : qs) {
        Vec x0 = cfg.grid.node_state(cfg.grid.nearest_node(q));
        auto res = oracle::enumerate_front(cfg.problem, cfg.cone, cfg.grid, 0, x0, landing, cfg.enumeration_cap,
                                           cfg.tols.tau_mem);
        char name[48];
        std::snprintf(name, sizeof(name), "oracle_front_%02d.csv", qi);
        std::ofstream out(fs::path(out_dir) / name);
        points_to_csv(out, res.front.points);
        json entry;
        entry["state"] = to_std(x0);
        entry["sequences"] = res.count;
        entry["front_size"] = res.front.size();
        entry["front"] = points_to_json(res.front.points);
        entry["file"] = name;
        entries.push_back(entry);
        std::cerr << "enumerated " << res.count << " sequences in " << res.wall_seconds << " s\n";
        ++qi;
    }
    summary["fronts"] = entries;
    write_json(fs::path(out_dir) / "oracle.json", summary);
    std::cout << summary.dump(2) << "\n";
    return exit_ok;
}

int cmd_info(const std::string& problem_path) {
    ProblemConfig cfg = load_problem(problem_path);
    json info;
    info["name"] = cfg.name;
    info["problem_hash"] = cfg.hash_hex;
    info["tool_version"] = tool_version;
    info["state_dim"] = cfg.problem.state_dim;
    info["cost_dim"] = cfg.problem.cost_dim;
    info["controls"] = cfg.problem.control_samples.size();
    info["horizon"] = cfg.problem.horizon;
    info["time_steps"] = cfg.grid.n_time;
    info["state_nodes"] = cfg.grid.node_count();
    if (cfg.cone.solid()) info["mu_P"] = cfg.cone.mu();
    if (cfg.cone_outer) {
        ConePair pair(cfg.cone, *cfg.cone_outer);
        info["alpha"] = alpha(pair);
        info["alpha_prime"] = alpha_prime(pair);
        info["lipschitz_constant"] = lipschitz_constant(pair);
    }
    std::cout << info.dump(2) << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"set-valued dynamic programming for cone-ordered multiobjective optimal control"};
    app.require_subcommand(1);

    std::string problem_path, out_dir, field_dir, which, report_path, landing = "nearest";
    int jobs = 1;
    bool scalar = false;

    auto* solve = app.add_subcommand("solve", "solve the DP recursion and export the value field");
    solve->add_option("problem", problem_path, "problem JSON file")->required();
    solve->add_option("--out", out_dir, "output directory")->required();
    solve->add_option("--jobs", jobs, "worker threads per time slice");

    auto* verify = app.add_subcommand("verify", "run a verification check");
    verify->add_option("problem", problem_path, "problem JSON file")->required();
    verify->add_option("--which", which, "estimates|dpp|contingent|proximal|lipschitz")->required();
    verify->add_option("--field", field_dir, "field directory from solve");
    verify->add_option("--report", report_path, "write the JSON report here");

    auto* orc = app.add_subcommand("oracle", "exhaustive enumeration / scalar DP ground truth");
    orc->add_option("problem", problem_path, "problem JSON file")->required();
    orc->add_option("--out", out_dir, "output directory")->required();
    orc->add_flag("--scalar", scalar, "also run the scalar DP table (cost_dim 1 only)");
    orc->add_option("--landing", landing, "nearest|continuous");

    auto* info = app.add_subcommand("info", "print problem summary and cone constants");
    info->add_option("problem", problem_path, "problem JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(problem_path, out_dir, jobs);
        if (verify->parsed()) return cmd_verify(problem_path, field_dir, which, report_path);
        if (orc->parsed()) return cmd_oracle(problem_path, out_dir, scalar, landing);
        if (info->parsed()) return cmd_info(problem_path);
    } catch (const schema_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_schema;
    } catch (const contract_error& e) {
        std::string msg = e.what();
        std::cerr << "error: " << msg << "\n";
        return msg.find("cap") != std::string::npos ? exit_cap : exit_schema;
    } catch (const numeric_error& e) {
        std::string msg = e.what();
        std::cerr << "error: " << msg << "\n";
        return msg.find("antichain") != std::string::npos || msg.find("terminal") != std::string::npos
                   ? exit_violation
                   : exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numeric;
    }
    return exit_ok;
}
