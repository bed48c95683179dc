#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "conedp/dp.hpp"
#include "conedp/oracle.hpp"

namespace conedp {

using nlohmann::json;

/// Thrown on malformed problem files / schema violations (CLI exit 2).
class schema_error : public std::runtime_error {
public:
    explicit schema_error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr const char* tool_version = "0.1.0";

// ---------------------------------------------------------------------------
// Expression tables: declarative dynamics/cost rows, no code execution.
// Each row is a sum of terms  coef * prod x_i^p_i * prod u_j^q_j * trig(arg),
// arg = <x_lin, x> + <u_lin, u> + phase.
// ---------------------------------------------------------------------------

struct ExprTerm {
    double coef = 1.0;
    std::vector<int> x_pow, u_pow;
    int func = 0;  // 0 none, 1 sin, 2 cos
    std::vector<double> x_lin, u_lin;
    double phase = 0.0;
};

using ExprTable = std::vector<std::vector<ExprTerm>>;  // one row per output dim

inline double eval_term(const ExprTerm& t, const Vec& x, const Vec& u) {
    double v = t.coef;
    for (size_t i = 0; i < t.x_pow.size(); ++i)
        for (int k = 0; k < t.x_pow[i]; ++k) v *= x[static_cast<Eigen::Index>(i)];
    for (size_t j = 0; j < t.u_pow.size(); ++j)
        for (int k = 0; k < t.u_pow[j]; ++k) v *= u[static_cast<Eigen::Index>(j)];
    if (t.func != 0) {
        double arg = t.phase;
        for (size_t i = 0; i < t.x_lin.size(); ++i) arg += t.x_lin[i] * x[static_cast<Eigen::Index>(i)];
        for (size_t j = 0; j < t.u_lin.size(); ++j) arg += t.u_lin[j] * u[static_cast<Eigen::Index>(j)];
        v *= (t.func == 1) ? std::sin(arg) : std::cos(arg);
    }
    return v;
}

inline Vec eval_table(const ExprTable& table, const Vec& x, const Vec& u) {
    Vec out(static_cast<Eigen::Index>(table.size()));
    for (size_t r = 0; r < table.size(); ++r) {
        double s = 0.0;
        for (const auto& t : table[r]) s += eval_term(t, x, u);
        out[static_cast<Eigen::Index>(r)] = s;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Problem file parsing (schema version 1).
// ---------------------------------------------------------------------------

struct Tolerances {
    double tau_mem = tol::mem;
    std::optional<double> tol_dpp;
    std::optional<double> tol_tan;
    std::optional<double> tol_prox;
};

struct ProblemConfig {
    std::string name;
    ControlProblem problem;
    ExprTable dynamics_table, cost_table;
    OrderingCone cone{1, {make_vec({1.0})}};  // replaced by the parsed cone
    std::optional<OrderingCone> cone_outer;
    GridSpec grid;
    Tolerances tols;
    uint64_t seed = 12345;
    uint64_t enumeration_cap = 1000000;
    std::vector<Vec> query_states;
    std::string hash_hex;
};

namespace detail {

inline ExprTerm parse_term(const json& j) {
    ExprTerm t;
    if (!j.is_object()) throw schema_error("expression term must be an object");
    t.coef = j.value("coef", 1.0);
    t.x_pow = j.value("x_pow", std::vector<int>{});
    t.u_pow = j.value("u_pow", std::vector<int>{});
    std::string fn = j.value("func", std::string{});
    if (fn == "sin") t.func = 1;
    else if (fn == "cos") t.func = 2;
    else if (!fn.empty()) throw schema_error("unknown func '" + fn + "' (expected sin/cos)");
    t.x_lin = j.value("x_lin", std::vector<double>{});
    t.u_lin = j.value("u_lin", std::vector<double>{});
    t.phase = j.value("phase", 0.0);
    for (int p : t.x_pow)
        if (p < 0) throw schema_error("negative exponent in expression term");
    for (int p : t.u_pow)
        if (p < 0) throw schema_error("negative exponent in expression term");
    return t;
}

inline ExprTable parse_table(const json& j, int rows, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows)
        throw schema_error(std::string(what) + " must be an array with one row per output dimension");
    ExprTable table;
    for (const auto& row : j) {
        if (!row.is_array()) throw schema_error(std::string(what) + " rows must be arrays of terms");
        std::vector<ExprTerm> terms;
        for (const auto& tj : row) terms.push_back(parse_term(tj));
        table.push_back(std::move(terms));
    }
    return table;
}

inline OrderingCone parse_cone(const json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("generators"))
        throw schema_error("cone requires {dim, generators}");
    int dim = j.at("dim").get<int>();
    std::vector<Vec> gens;
    for (const auto& g : j.at("generators")) gens.push_back(to_vec(g.get<std::vector<double>>()));
    try {
        return OrderingCone(dim, std::move(gens));
    } catch (const contract_error& e) {
        throw schema_error(std::string("invalid cone: ") + e.what());
    }
}

inline uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace detail

inline std::string canonical_hash(const json& j) {
    uint64_t h = detail::fnv1a64(j.dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline ProblemConfig parse_problem(const json& root) {
    if (!root.is_object()) throw schema_error("problem file must be a JSON object");
    if (root.value("schema", -1) != 1) throw schema_error("unsupported schema version (expected 1)");
    ProblemConfig cfg;
    cfg.name = root.value("name", std::string("unnamed"));
    cfg.hash_hex = canonical_hash(root);

    const json& pj = root.at("problem");
    ControlProblem& p = cfg.problem;
    p.state_dim = pj.at("state_dim").get<int>();
    p.control_dim = pj.at("control_dim").get<int>();
    p.cost_dim = pj.at("cost_dim").get<int>();
    p.horizon = pj.at("horizon").get<double>();
    cfg.dynamics_table = detail::parse_table(pj.at("dynamics"), p.state_dim, "dynamics");
    cfg.cost_table = detail::parse_table(pj.at("cost"), p.cost_dim, "cost");
    for (const auto& u : pj.at("controls")) p.control_samples.push_back(to_vec(u.get<std::vector<double>>()));
    const json& cj = pj.at("constants");
    p.K_f = cj.at("K_f").get<double>();
    p.M_f = cj.at("M_f").get<double>();
    p.K_L = cj.at("K_L").get<double>();
    p.M_L = cj.at("M_L").get<double>();
    ExprTable dyn = cfg.dynamics_table, cost = cfg.cost_table;
    p.dynamics = [dyn](const Vec& x, const Vec& u) { return eval_table(dyn, x, u); };
    p.running_cost = [cost](const Vec& x, const Vec& u) { return eval_table(cost, x, u); };
    try {
        p.validate();
    } catch (const contract_error& e) {
        throw schema_error(std::string("invalid problem: ") + e.what());
    }

    cfg.cone = detail::parse_cone(root.at("cone"));
    if (cfg.cone.dim() != p.cost_dim) throw schema_error("cone dimension must equal cost_dim");
    if (root.contains("cone_outer")) {
        cfg.cone_outer = detail::parse_cone(root.at("cone_outer"));
        try {
            ConePair pair(cfg.cone, *cfg.cone_outer);
        } catch (const contract_error& e) {
            throw schema_error(std::string("invalid cone pair: ") + e.what());
        }
    }

    const json& gj = root.at("grid");
    GridSpec& g = cfg.grid;
    g.horizon = p.horizon;
    g.n_time = gj.at("n_time").get<int>();
    g.lo = to_vec(gj.at("lo").get<std::vector<double>>());
    g.hi = to_vec(gj.at("hi").get<std::vector<double>>());
    g.nodes = gj.at("nodes").get<std::vector<int>>();
    std::string interp = gj.value("interpolation", std::string("nearest"));
    if (interp == "nearest") g.interp = Interp::nearest;
    else if (interp == "corners") g.interp = Interp::corners;
    else throw schema_error("interpolation must be nearest|corners");
    std::string escape = gj.value("escape", std::string("error"));
    if (escape == "error") g.escape = Escape::error;
    else if (escape == "clamp") g.escape = Escape::clamp;
    else throw schema_error("escape must be error|clamp");
    g.eps_front = gj.value("eps_front", 0.0);
    try {
        g.validate(p.state_dim);
    } catch (const contract_error& e) {
        throw schema_error(std::string("invalid grid: ") + e.what());
    }

    if (root.contains("tolerances")) {
        const json& tj = root.at("tolerances");
        cfg.tols.tau_mem = tj.value("tau_mem", tol::mem);
        if (tj.contains("tol_dpp")) cfg.tols.tol_dpp = tj.at("tol_dpp").get<double>();
        if (tj.contains("tol_tan")) cfg.tols.tol_tan = tj.at("tol_tan").get<double>();
        if (tj.contains("tol_prox")) cfg.tols.tol_prox = tj.at("tol_prox").get<double>();
    }
    if (root.contains("seeds")) cfg.seed = root.at("seeds").value("master", 12345);
    if (root.contains("caps")) cfg.enumeration_cap = root.at("caps").value("enumeration", 1000000ULL);
    if (root.contains("query")) {
        const json& qj = root.at("query");
        if (qj.contains("x0")) cfg.query_states.push_back(to_vec(qj.at("x0").get<std::vector<double>>()));
        if (qj.contains("states"))
            for (const auto& s : qj.at("states")) cfg.query_states.push_back(to_vec(s.get<std::vector<double>>()));
    }
    for (const auto& q : cfg.query_states)
        if (q.size() != p.state_dim) throw schema_error("query state dimension mismatch");

    // Declared constants are trusted but spot-checked; lying is a
    // configuration error surfaced at load time.
    auto chk = spot_check_constants(p, g.lo, g.hi, 120, cfg.seed);
    if (!chk.ok) throw schema_error("declared constants violated on probe points (K_f/M_f/K_L/M_L)");
    return cfg;
}

inline ProblemConfig load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw schema_error("cannot open problem file: " + path);
    json root;
    try {
        in >> root;
    } catch (const std::exception& e) {
        throw schema_error(std::string("JSON parse error: ") + e.what());
    }
    return parse_problem(root);
}

// ---------------------------------------------------------------------------
// Deterministic number formatting and field export/import.
// ---------------------------------------------------------------------------

/// Locale-independent shortest round-trip formatting.
inline std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Point sets serialize either as CSV (one point per row) or as a JSON array
/// of coordinate arrays.
inline json points_to_json(const std::vector<Vec>& points) {
    json arr = json::array();
    for (const auto& p : points) arr.push_back(to_std(p));
    return arr;
}

inline void points_to_csv(std::ostream& out, const std::vector<Vec>& points) {
    for (const auto& p : points) {
        for (Eigen::Index i = 0; i < p.size(); ++i) out << (i ? "," : "") << fmt_double(p[i]);
        out << "\n";
    }
}

inline json cone_to_json(const OrderingCone& cone) {
    json j;
    j["dim"] = cone.dim();
    json gens = json::array();
    for (const auto& g : cone.generators()) gens.push_back(to_std(g));
    j["generators"] = gens;
    return j;
}

inline json grid_to_json(const GridSpec& g) {
    json j;
    j["horizon"] = g.horizon;
    j["n_time"] = g.n_time;
    j["lo"] = to_std(g.lo);
    j["hi"] = to_std(g.hi);
    j["nodes"] = g.nodes;
    j["interpolation"] = g.interp == Interp::nearest ? "nearest" : "corners";
    j["escape"] = g.escape == Escape::error ? "error" : "clamp";
    j["eps_front"] = g.eps_front;
    return j;
}

/// Writes the field as one CSV per time slice (rows: node index, node state,
/// front point) plus a manifest with the grid, cone and problem hash.
inline void export_field(const ValueField& field, const OrderingCone& cone, const std::string& problem_hash,
                         const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["schema"] = 1;
    manifest["tool_version"] = tool_version;
    manifest["problem_hash"] = problem_hash;
    manifest["cost_dim"] = field.cost_dim;
    manifest["grid"] = grid_to_json(field.grid);
    manifest["cone"] = cone_to_json(cone);
    manifest["slices"] = field.grid.n_time + 1;
    {
        std::ofstream mf(dir / "manifest.json");
        mf << manifest.dump(2) << "\n";
    }
    for (int s = 0; s <= field.grid.n_time; ++s) {
        char name[32];
        std::snprintf(name, sizeof(name), "slice_%03d.csv", s);
        std::ofstream out(dir / name);
        for (size_t j = 0; j < field.grid.node_count(); ++j) {
            Vec x = field.grid.node_state(j);
            for (const auto& y : field.front(s, j).points) {
                out << j;
                for (Eigen::Index i = 0; i < x.size(); ++i) out << "," << fmt_double(x[i]);
                for (Eigen::Index i = 0; i < y.size(); ++i) out << "," << fmt_double(y[i]);
                out << "\n";
            }
        }
    }
}

struct LoadedField {
    ValueField field;
    OrderingCone cone{1, {make_vec({1.0})}};
    std::string problem_hash;
};

/// Reads a field directory back; validates the extremal-element (antichain)
/// property of every stored front and the terminal condition.
inline LoadedField import_field(const std::filesystem::path& dir, double tau_mem = tol::mem) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw schema_error("missing manifest.json in " + dir.string());
    json manifest;
    try {
        mf >> manifest;
    } catch (const std::exception& e) {
        throw schema_error(std::string("manifest parse error: ") + e.what());
    }
    LoadedField lf;
    lf.problem_hash = manifest.at("problem_hash").get<std::string>();
    lf.cone = detail::parse_cone(manifest.at("cone"));
    const json& gj = manifest.at("grid");
    GridSpec& g = lf.field.grid;
    g.horizon = gj.at("horizon").get<double>();
    g.n_time = gj.at("n_time").get<int>();
    g.lo = to_vec(gj.at("lo").get<std::vector<double>>());
    g.hi = to_vec(gj.at("hi").get<std::vector<double>>());
    g.nodes = gj.at("nodes").get<std::vector<int>>();
    g.interp = gj.at("interpolation").get<std::string>() == "corners" ? Interp::corners : Interp::nearest;
    g.escape = gj.at("escape").get<std::string>() == "clamp" ? Escape::clamp : Escape::error;
    g.eps_front = gj.value("eps_front", 0.0);
    lf.field.cost_dim = manifest.at("cost_dim").get<int>();

    lf.field.fronts.assign(static_cast<size_t>(g.n_time) + 1, std::vector<ParetoFront>(g.node_count()));
    for (int s = 0; s <= g.n_time; ++s) {
        char name[32];
        std::snprintf(name, sizeof(name), "slice_%03d.csv", s);
        std::ifstream in(dir / name);
        if (!in) throw schema_error(std::string("missing slice file ") + name);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string cell;
            std::vector<double> cells;
            bool first = true;
            size_t node = 0;
            try {
                while (std::getline(ss, cell, ',')) {
                    if (first) {
                        node = static_cast<size_t>(std::stoull(cell));
                        first = false;
                    } else {
                        cells.push_back(std::stod(cell));
                    }
                }
            } catch (const std::exception&) {
                throw schema_error(std::string("malformed cell in ") + name);
            }
            int n_state = static_cast<int>(g.nodes.size());
            if (cells.size() != static_cast<size_t>(n_state + lf.field.cost_dim))
                throw schema_error("malformed slice row (wrong column count)");
            if (node >= g.node_count()) throw schema_error("node index out of range in slice file");
            Vec y(lf.field.cost_dim);
            for (int i = 0; i < lf.field.cost_dim; ++i) y[i] = cells[static_cast<size_t>(n_state + i)];
            lf.field.fronts[static_cast<size_t>(s)][node].points.push_back(y);
        }
    }
    for (auto& slice : lf.field.fronts)
        for (auto& front : slice) std::sort(front.points.begin(), front.points.end(), lex_less);
    // Validate the extremal-element map property.
    for (int s = 0; s <= g.n_time; ++s)
        for (size_t j = 0; j < g.node_count(); ++j) {
            size_t bi = 0, bj = 0;
            const auto& pts = lf.field.front(s, j).points;
            if (pts.empty()) throw schema_error("empty front in imported field");
            if (!is_antichain(pts, lf.cone, tau_mem, &bi, &bj)) {
                std::ostringstream msg;
                msg << "front antichain violated at slice " << s << " node " << j << ": point (";
                const Vec& a = pts[bi];
                for (Eigen::Index i = 0; i < a.size(); ++i) msg << (i ? "," : "") << a[i];
                msg << ") dominated by (";
                const Vec& b = pts[bj];
                for (Eigen::Index i = 0; i < b.size(); ++i) msg << (i ? "," : "") << b[i];
                msg << ")";
                throw numeric_error(msg.str());
            }
        }
    for (size_t j = 0; j < g.node_count(); ++j) {
        const auto& t = lf.field.front(g.n_time, j).points;
        if (t.size() != 1 || t[0].norm() > 1e-12)
            throw numeric_error("terminal slice is not {0} in imported field");
    }
    return lf;
}

}  // namespace conedp
