#include "thinhomog/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace thinhomog {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config error at " + path + ": " + what);
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!ok.count(it.key())) fail(path + "." + it.key(), "unknown key");
    }
}

const json& require(const json& j, const std::string& path, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "missing required key");
    return *it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> as_number_list(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

double opt_number(const json& j, const std::string& path, const char* key, double fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : as_number(*it, path + "." + key);
}

int opt_int(const json& j, const std::string& path, const char* key, int fallback) {
    auto it = j.find(key);
    return it == j.end() ? fallback : as_int(*it, path + "." + key);
}

std::string opt_string(const json& j, const std::string& path, const char* key, std::string fallback) {
    auto it = j.find(key);
    return it == j.end() ? std::move(fallback) : as_string(*it, path + "." + key);
}

Expr parse_expr_checked(const std::string& text, const std::string& path) {
    try {
        return Expr::parse(text);
    } catch (const ParseError& e) {
        fail(path, std::string("bad expression: ") + e.what());
    }
}

} // namespace

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

Profile profile_from_json(const json& j, const std::string& path) {
    check_keys(j, path, {"kind", "value", "expr", "breakpoints", "pieces", "L", "G0", "G1", "M"});
    const std::string kind = as_string(require(j, path, "kind"), path + ".kind");
    const double L = opt_number(j, path, "L", 1.0);
    std::optional<double> M;
    if (j.contains("M")) M = as_number(j["M"], path + ".M");

    try {
        if (kind == "constant") {
            const double value = as_number(require(j, path, "value"), path + ".value");
            return Profile::constant(value, L);
        }
        const double G0 = as_number(require(j, path, "G0"), path + ".G0");
        const double G1 = as_number(require(j, path, "G1"), path + ".G1");
        if (kind == "expression") {
            const std::string src = as_string(require(j, path, "expr"), path + ".expr");
            parse_expr_checked(src, path + ".expr");
            return Profile::expression(src, L, G0, G1, M);
        }
        if (kind == "piecewise") {
            auto breaks = as_number_list(require(j, path, "breakpoints"), path + ".breakpoints");
            const json& pieces_json = require(j, path, "pieces");
            if (!pieces_json.is_array()) fail(path + ".pieces", "expected an array of expressions");
            std::vector<std::string> pieces;
            for (std::size_t i = 0; i < pieces_json.size(); ++i) {
                const std::string at = path + ".pieces[" + std::to_string(i) + "]";
                pieces.push_back(as_string(pieces_json[i], at));
                parse_expr_checked(pieces.back(), at);
            }
            return Profile::piecewise(std::move(breaks), std::move(pieces), L, G0, G1, M);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
    fail(path + ".kind", "expected constant, expression or piecewise");
}

json profile_to_json(const Profile& profile) {
    json j;
    j["L"] = profile.L;
    j["G0"] = profile.G0;
    j["G1"] = profile.G1;
    if (profile.M) j["M"] = *profile.M;
    switch (profile.kind) {
    case Profile::Kind::Constant:
        j["kind"] = "constant";
        j["value"] = profile.pieces.at(0).eval(0.0, 0.0);
        break;
    case Profile::Kind::Expression:
        j["kind"] = "expression";
        j["expr"] = profile.pieces.at(0).str();
        break;
    case Profile::Kind::Piecewise: {
        j["kind"] = "piecewise";
        j["breakpoints"] = profile.breakpoints;
        std::vector<std::string> texts;
        for (const Expr& e : profile.pieces) texts.push_back(e.str());
        j["pieces"] = texts;
        break;
    }
    }
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    const std::string path = "$";
    check_keys(j, path,
               {"study", "profile", "profile_hat", "p", "p_list", "eps_list", "delta_list", "t_list",
                "bump", "f", "resolution", "out_dir", "seed"});

    ExperimentConfig cfg;
    cfg.study = as_string(require(j, path, "study"), path + ".study");
    static const std::set<std::string> studies = {"convergence", "piecewise", "domaindep", "appendix"};
    if (!studies.count(cfg.study)) fail(path + ".study", "expected convergence, piecewise, domaindep or appendix");

    cfg.profile = profile_from_json(require(j, path, "profile"), path + ".profile");
    if (j.contains("profile_hat")) cfg.profile_hat = profile_from_json(j["profile_hat"], path + ".profile_hat");

    const bool has_p = j.contains("p");
    const bool has_list = j.contains("p_list");
    if (has_p == has_list) fail(path, "provide exactly one of p and p_list");
    if (has_p) {
        cfg.p_list = {as_number(j["p"], path + ".p")};
    } else {
        cfg.p_list = as_number_list(j["p_list"], path + ".p_list");
    }
    if (cfg.p_list.empty()) fail(path + ".p_list", "must be non-empty");
    for (double p : cfg.p_list)
        if (!(p > 1.0)) fail(path + ".p_list", "every exponent must exceed 1");

    if (j.contains("eps_list")) cfg.eps_list = as_number_list(j["eps_list"], path + ".eps_list");
    if (j.contains("delta_list")) cfg.delta_list = as_number_list(j["delta_list"], path + ".delta_list");
    if (j.contains("t_list")) cfg.t_list = as_number_list(j["t_list"], path + ".t_list");
    cfg.bump = opt_string(j, path, "bump", cfg.bump);
    cfg.f = opt_string(j, path, "f", cfg.f);
    parse_expr_checked(cfg.bump, path + ".bump");
    parse_expr_checked(cfg.f, path + ".f");

    if (j.contains("resolution")) {
        const json& r = j["resolution"];
        const std::string rp = path + ".resolution";
        check_keys(r, rp,
                   {"cell_n1", "cell_n2", "grid_n", "solver_n", "column_points", "points_per_period",
                    "min_layers", "min_columns"});
        cfg.resolution.cell_n1 = opt_int(r, rp, "cell_n1", cfg.resolution.cell_n1);
        cfg.resolution.cell_n2 = opt_int(r, rp, "cell_n2", cfg.resolution.cell_n2);
        cfg.resolution.grid_n = opt_int(r, rp, "grid_n", cfg.resolution.grid_n);
        cfg.resolution.solver_n = opt_int(r, rp, "solver_n", cfg.resolution.solver_n);
        cfg.resolution.column_points = opt_int(r, rp, "column_points", cfg.resolution.column_points);
        cfg.resolution.points_per_period = opt_int(r, rp, "points_per_period", cfg.resolution.points_per_period);
        cfg.resolution.min_layers = opt_int(r, rp, "min_layers", cfg.resolution.min_layers);
        cfg.resolution.min_columns = opt_int(r, rp, "min_columns", cfg.resolution.min_columns);
        for (int v : {cfg.resolution.cell_n1, cfg.resolution.cell_n2, cfg.resolution.grid_n,
                      cfg.resolution.solver_n, cfg.resolution.column_points, cfg.resolution.points_per_period,
                      cfg.resolution.min_layers, cfg.resolution.min_columns})
            if (v <= 0) fail(rp, "resolutions must be positive");
    }

    cfg.out_dir = opt_string(j, path, "out_dir", cfg.out_dir);
    cfg.seed = static_cast<std::uint64_t>(opt_number(j, path, "seed", static_cast<double>(cfg.seed)));

    const bool needs_eps = cfg.study == "convergence" || cfg.study == "domaindep";
    if (needs_eps && cfg.eps_list.empty()) fail(path + ".eps_list", "required for this study");
    if ((cfg.study == "piecewise" || cfg.study == "domaindep") && cfg.delta_list.empty())
        fail(path + ".delta_list", "required for this study");
    if (cfg.study == "appendix" && cfg.t_list.empty()) fail(path + ".t_list", "required for this study");
    for (double e : cfg.eps_list)
        if (!(e > 0.0)) fail(path + ".eps_list", "entries must be positive");
    for (double d : cfg.delta_list)
        if (!(d > 0.0)) fail(path + ".delta_list", "entries must be positive");
    for (double t : cfg.t_list)
        if (!(t > 0.0)) fail(path + ".t_list", "entries must be positive");
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_json(load_json_file(path));
}

json ExperimentConfig::to_json() const {
    json j;
    j["study"] = study;
    j["profile"] = profile_to_json(profile);
    if (profile_hat) j["profile_hat"] = profile_to_json(*profile_hat);
    j["p_list"] = p_list;
    if (!eps_list.empty()) j["eps_list"] = eps_list;
    if (!delta_list.empty()) j["delta_list"] = delta_list;
    if (!t_list.empty()) j["t_list"] = t_list;
    j["bump"] = bump;
    j["f"] = f;
    json r;
    r["cell_n1"] = resolution.cell_n1;
    r["cell_n2"] = resolution.cell_n2;
    r["grid_n"] = resolution.grid_n;
    r["solver_n"] = resolution.solver_n;
    r["column_points"] = resolution.column_points;
    r["points_per_period"] = resolution.points_per_period;
    r["min_layers"] = resolution.min_layers;
    r["min_columns"] = resolution.min_columns;
    j["resolution"] = r;
    j["out_dir"] = out_dir;
    j["seed"] = seed;
    return j;
}

std::uint64_t ExperimentConfig::config_hash() const {
    return fnv1a64(to_json().dump());
}

} // namespace thinhomog
