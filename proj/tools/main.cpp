#include "thinhomog/cell.hpp"
#include "thinhomog/config.hpp"
#include "thinhomog/csv.hpp"
#include "thinhomog/experiments.hpp"
#include "thinhomog/homog1d.hpp"
#include "thinhomog/thin2d.hpp"
#include "thinhomog/version.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace th = thinhomog;
using nlohmann::json;

namespace {

std::string now_iso() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string hash_hex(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// THINHOMOG_OUT beats --out beats the config/default directory.
std::string resolve_out(const std::string& flag_out, bool flag_given, const std::string& fallback) {
    if (const char* env = std::getenv("THINHOMOG_OUT"); env && *env) return env;
    if (flag_given) return flag_out;
    return fallback.empty() ? "." : fallback;
}

void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    std::uint64_t config_hash, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, const std::string& started) {
    std::filesystem::create_directories(out_dir);
    json m;
    m["tool"] = "thinhomog";
    m["version"] = th::kVersion;
    m["subcommand"] = subcommand;
    m["config_hash"] = hash_hex(config_hash);
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["started"] = started;
    m["finished"] = now_iso();
    std::ofstream out(out_dir + "/manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_dir + "/manifest.json");
    out << m.dump(2) << "\n";
}

json report_json(const th::SolveReport& r) {
    json j;
    j["converged"] = r.converged;
    j["newton_iterations"] = r.newton_iterations;
    j["grad_norm"] = r.grad_norm;
    j["grad_norm_rel"] = r.grad_norm_rel;
    j["energy"] = r.energy;
    j["energy_history"] = r.energy_history;
    j["stage_iterations"] = r.stage_iterations;
    j["step_sizes"] = r.step_sizes;
    j["cg_total_iterations"] = r.cg_total_iterations;
    j["cg_failed"] = r.cg_failed;
    j["line_search_failed"] = r.line_search_failed;
    j["wall_seconds"] = r.wall_seconds;
    return j;
}

std::vector<double> uniform_grid(int n) {
    std::vector<double> xs(n + 1);
    for (int i = 0; i <= n; ++i) xs[i] = static_cast<double>(i) / n;
    return xs;
}

struct CliState {
    std::string profile_path;
    std::string config_path;
    std::string out = ".";
    bool out_given = false;
    double p = 2.0;
    double eps = 0.125;
    double x = 0.5;
    int n1 = 64, n2 = 64;
    int grid_n = 64;
    int n = 256;
    double q_const = 0.0, r_const = 0.0;
    bool q_given = false, r_given = false;
    std::string fhat = "1";
    std::string f = "1";
    int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::uint64_t seed = 0;
    bool seed_given = false;
};

th::Profile load_profile(const std::string& path) {
    return th::profile_from_json(th::load_json_file(path), path);
}

int run_cell(const CliState& s) {
    const std::string started = now_iso();
    th::Profile profile = load_profile(s.profile_path);
    th::CellSolution sol = th::solve_cell(profile, s.x, s.p, {s.n1, s.n2});
    std::printf("q=%.12f r=%.12f\n", sol.q_flux, sol.r);
    const std::string out = resolve_out(s.out, s.out_given, ".");
    write_manifest(out, "cell", profile.hash(), {s.profile_path}, {}, started);
    return 0;
}

int run_coeffs(const CliState& s) {
    const std::string started = now_iso();
    th::Profile profile = load_profile(s.profile_path);
    th::EffectiveCoefficients coeffs =
        th::sample_coefficients(profile, uniform_grid(s.grid_n), s.p, {s.n1, s.n2});
    th::Csv csv({"x", "q", "r"});
    for (std::size_t i = 0; i < coeffs.x.size(); ++i)
        csv.add_numeric_row({coeffs.x[i], coeffs.q[i], coeffs.r[i]});
    const std::string out = resolve_out(s.out, s.out_given, ".");
    std::filesystem::create_directories(out);
    const std::string path = out + "/coeffs.csv";
    csv.write(path);
    std::printf("coeffs: %zu samples -> %s\n", coeffs.x.size(), path.c_str());
    write_manifest(out, "coeffs", profile.hash(), {s.profile_path}, {path}, started);
    return 0;
}

int run_solve1d(const CliState& s) {
    const std::string started = now_iso();
    th::Expr fhat_expr = th::Expr::parse(s.fhat);
    if (fhat_expr.depends_on_y()) throw th::ConfigError("solve1d: fhat must depend on x only");
    auto fhat = [fhat_expr](double x) { return fhat_expr.eval(x, 0.0); };

    std::vector<std::string> inputs;
    th::Solve1DResult res;
    std::uint64_t hash = 0;
    if (s.q_given != s.r_given)
        throw th::ConfigError("solve1d: provide both --q and --r or neither");
    if (s.q_given) {
        if (!s.profile_path.empty())
            throw th::ConfigError("solve1d: --profile conflicts with --q/--r");
        th::CoefficientTable q({0.0, 1.0}, {s.q_const, s.q_const}, "q");
        th::CoefficientTable r({0.0, 1.0}, {s.r_const, s.r_const}, "r");
        res = th::solve_homogenized(q, r, fhat, s.p, s.n);
    } else {
        if (s.profile_path.empty())
            throw th::ConfigError("solve1d: need --profile or constant --q/--r");
        th::Profile profile = load_profile(s.profile_path);
        hash = profile.hash();
        inputs.push_back(s.profile_path);
        th::EffectiveCoefficients coeffs =
            th::sample_coefficients(profile, uniform_grid(s.grid_n), s.p, {s.n1, s.n2});
        th::CoefficientTable q(coeffs.x, coeffs.q, "q");
        th::CoefficientTable r(coeffs.x, coeffs.r, "r");
        res = th::solve_homogenized(q, r, fhat, s.p, s.n);
    }

    th::Csv csv({"x", "u"});
    for (std::size_t i = 0; i < res.u.values.size(); ++i)
        csv.add_numeric_row({res.u.x(static_cast<int>(i)), res.u.values[i]});
    const std::string out = resolve_out(s.out, s.out_given, ".");
    std::filesystem::create_directories(out);
    const std::string path = out + "/solve1d.csv";
    csv.write(path);
    std::printf("solve1d: %d newton iterations -> %s\n", res.report.newton_iterations, path.c_str());
    write_manifest(out, "solve1d", hash, inputs, {path}, started);
    return 0;
}

int run_solve2d(const CliState& s) {
    const std::string started = now_iso();
    th::Profile profile = load_profile(s.profile_path);
    th::Expr f_expr = th::Expr::parse(s.f);
    th::EpsilonProblem problem;
    problem.profile = profile;
    problem.eps = s.eps;
    problem.p = s.p;
    problem.f = [f_expr](double x, double y) { return f_expr.eval(x, y); };
    th::EpsilonSolution sol = th::solve_epsilon_problem(problem);

    const std::string out = resolve_out(s.out, s.out_given, ".");
    std::filesystem::create_directories(out);
    const std::string mesh_path = out + "/solve2d_mesh.txt";
    const std::string field_path = out + "/solve2d_u.csv";
    const std::string report_path = out + "/solve2d_report.json";
    th::write_mesh_file(mesh_path, *sol.mesh);
    th::Csv csv({"x", "y", "u"});
    for (int node = 0; node < sol.mesh->node_count(); ++node)
        csv.add_numeric_row({sol.mesh->nodes[node].x, sol.mesh->nodes[node].y, sol.u.at_node(node)});
    csv.write(field_path);
    json rep = report_json(sol.report);
    rep["nx"] = sol.nx;
    rep["ny"] = sol.ny;
    rep["u_w1p_triple"] = sol.u_w1p_triple;
    rep["f_lpp_triple"] = sol.f_lpp_triple;
    rep["energy_bound_ok"] = sol.energy_bound_ok;
    {
        std::ofstream r(report_path, std::ios::binary);
        r << rep.dump(2) << "\n";
    }
    std::printf("solve2d: %dx%d mesh, %d newton iterations -> %s\n", sol.nx, sol.ny,
                sol.report.newton_iterations, field_path.c_str());
    write_manifest(out, "solve2d", profile.hash(), {s.profile_path},
                   {mesh_path, field_path, report_path}, started);
    return 0;
}

int run_validate(const CliState& s) {
    const std::string started = now_iso();
    th::Profile profile = load_profile(s.profile_path);
    th::HypothesisReport rep = th::validate_hypothesis(profile);
    json j;
    j["pass"] = rep.pass;
    j["min_value"] = rep.min_value;
    j["max_value"] = rep.max_value;
    j["periodicity_defect"] = rep.periodicity_defect;
    j["max_dy"] = rep.max_dy;
    j["failures"] = rep.failures;
    json jumps = json::array();
    for (const auto& jm : rep.jumps) jumps.push_back({{"x", jm.x}, {"max_gap", jm.max_gap}});
    j["breakpoint_jumps"] = jumps;
    std::cout << j.dump(2) << "\n";
    const std::string out = resolve_out(s.out, s.out_given, ".");
    std::filesystem::create_directories(out);
    const std::string path = out + "/validate.json";
    {
        std::ofstream o(path, std::ios::binary);
        o << j.dump(2) << "\n";
    }
    write_manifest(out, "validate", profile.hash(), {s.profile_path}, {path}, started);
    return rep.pass ? 0 : 1;
}

int run_study_cmd(const CliState& s, const std::string& study) {
    const std::string started = now_iso();
    th::ExperimentConfig cfg = th::ExperimentConfig::from_file(s.config_path);
    if (cfg.study != study)
        throw th::ConfigError("config declares study '" + cfg.study + "' but subcommand is '" +
                              study + "'");
    if (s.seed_given) cfg.seed = s.seed;
    const std::string out = resolve_out(s.out, s.out_given, cfg.out_dir);
    th::StudyReport rep = th::run_study(cfg, s.jobs);
    std::vector<std::string> outputs = rep.write(out);
    std::printf("%s: %s (%s)\n", study.c_str(), rep.pass ? "PASS" : "FAIL", outputs[0].c_str());
    for (const auto& f : rep.failures) std::printf("  %s\n", f.c_str());
    write_manifest(out, study, rep.config_hash, {s.config_path}, outputs, started);
    return rep.pass ? 0 : 1;
}

int run_selftest(const CliState& s) {
    const std::string started = now_iso();
    const std::uint64_t seed = s.seed_given ? s.seed : 20240801u;

    for (double p : {1.2, 1.5, 2.0, 3.0, 4.0}) {
        th::InequalitySuiteResult r = th::run_inequality_suite(p, 10000, seed);
        if (!r.pass)
            throw th::ValidationError("selftest: inequality suite failed at p=" + th::Csv::num(p));
        std::printf("selftest inequalities p=%g: ok (c_p=%.3g)\n", p, r.min_coercivity);
    }

    {
        th::Profile flat = th::Profile::constant(2.0, 1.0);
        th::CellSolution sol = th::solve_cell(flat, 0.5, 3.0, {16, 16});
        double worst = 0.0;
        for (double v : sol.psi.values) worst = std::max(worst, std::fabs(v));
        if (worst > 1e-10 || std::fabs(sol.q_flux - 2.0) > 2e-10 || std::fabs(sol.r - 2.0) > 2e-10)
            throw th::ValidationError("selftest: flat cell is not exact");
        std::printf("selftest flat cell: ok (q=%.12f)\n", sol.q_flux);
    }

    {
        th::CoefficientTable q({0.0, 1.0}, {1.0, 1.0}, "q");
        th::CoefficientTable r({0.0, 1.0}, {1.0, 1.0}, "r");
        th::Solve1DResult res = th::solve_homogenized(q, r, [](double) { return 1.0; }, 2.5, 64);
        double worst = 0.0;
        for (double v : res.u.values) worst = std::max(worst, std::fabs(v - 1.0));
        if (worst > 1e-10) throw th::ValidationError("selftest: constant 1d solution drifted");
        std::printf("selftest constant 1d: ok (max drift %.3g)\n", worst);
    }

    {
        const double eps = 0.125;
        th::MeshPtr mesh = th::build_graph_mesh([&](double) { return eps * 1.0; }, 0.0, 1.0, 64,
                                                6, false);
        th::NodalField u = th::sample_field(mesh, [](double x, double) { return x; }, 2.0);
        th::MeshPtr cell = th::build_graph_mesh([](double) { return 1.0; }, 0.0, 1.0, 16, 16, true);
        th::UnfoldResult unfolded = th::unfold_periodic(u, *cell, eps, 2.0);
        if (unfolded.integral_defect > 1e-10 || unfolded.norm_defect > 1e-10)
            throw th::ValidationError("selftest: unfolding identity defect too large");
        std::printf("selftest unfolding: ok (defect %.3g)\n",
                    std::max(unfolded.integral_defect, unfolded.norm_defect));
    }

    {
        json j = {{"study", "convergence"},
                  {"profile", {{"kind", "constant"}, {"value", 1.0}, {"L", 1.0}}},
                  {"p", 2.0},
                  {"eps_list", {0.25, 0.125}}};
        th::ExperimentConfig cfg = th::ExperimentConfig::from_json(j);
        th::ExperimentConfig again = th::ExperimentConfig::from_json(cfg.to_json());
        if (cfg.to_json().dump() != again.to_json().dump() ||
            cfg.config_hash() != again.config_hash())
            throw th::ValidationError("selftest: config round trip changed the config");
        std::printf("selftest config round trip: ok (%s)\n", hash_hex(cfg.config_hash()).c_str());
    }

    const std::string out = resolve_out(s.out, s.out_given, ".");
    write_manifest(out, "selftest", seed, {}, {}, started);
    std::printf("selftest: all checks passed\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"thin-domain p-Laplacian homogenization toolkit"};
    app.set_version_flag("--version", th::kVersion);
    app.require_subcommand(1);

    CliState s;

    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", s.out, "output directory (THINHOMOG_OUT overrides)");
    };
    auto add_cell_res = [&](CLI::App* sub) {
        sub->add_option("--n1", s.n1, "cell columns");
        sub->add_option("--n2", s.n2, "cell layers");
    };

    CLI::App* cell = app.add_subcommand("cell", "solve one periodic cell, print q and r");
    cell->add_option("--profile", s.profile_path, "profile JSON")->required();
    cell->add_option("--p", s.p, "exponent p > 1");
    cell->add_option("--x", s.x, "slow position in [0,1]");
    add_cell_res(cell);
    add_out(cell);

    CLI::App* coeffs = app.add_subcommand("coeffs", "sweep effective q(x), r(x) to CSV");
    coeffs->add_option("--profile", s.profile_path, "profile JSON")->required();
    coeffs->add_option("--p", s.p, "exponent p > 1");
    coeffs->add_option("--grid-n", s.grid_n, "x-grid intervals");
    add_cell_res(coeffs);
    add_out(coeffs);

    CLI::App* solve1d = app.add_subcommand("solve1d", "solve the homogenized limit problem");
    solve1d->add_option("--profile", s.profile_path, "profile JSON (coefficients from cells)");
    solve1d->add_option("--q", s.q_const, "constant q coefficient");
    solve1d->add_option("--r", s.r_const, "constant r coefficient");
    solve1d->add_option("--fhat", s.fhat, "right-hand side expression in x");
    solve1d->add_option("--p", s.p, "exponent p > 1");
    solve1d->add_option("--n", s.n, "elements");
    solve1d->add_option("--grid-n", s.grid_n, "x-grid intervals for coefficients");
    add_cell_res(solve1d);
    add_out(solve1d);

    CLI::App* solve2d = app.add_subcommand("solve2d", "solve the thin-domain problem");
    solve2d->add_option("--profile", s.profile_path, "profile JSON")->required();
    solve2d->add_option("--p", s.p, "exponent p > 1");
    solve2d->add_option("--eps", s.eps, "thinness parameter")->required();
    solve2d->add_option("--f", s.f, "load expression in x, y");
    add_out(solve2d);

    for (const char* study : {"converge", "piecewise", "domaindep", "appendix"}) {
        CLI::App* sub = app.add_subcommand(study, std::string("run the ") + study + " study");
        sub->add_option("--config", s.config_path, "experiment config JSON")->required();
        sub->add_option("--jobs", s.jobs, "worker threads");
        sub->add_option("--seed", s.seed, "seed override");
        add_out(sub);
    }

    CLI::App* validate = app.add_subcommand("validate", "check the structural hypothesis");
    validate->add_option("--profile", s.profile_path, "profile JSON")->required();
    add_out(validate);

    CLI::App* selftest = app.add_subcommand("selftest", "run the built-in invariant suites");
    selftest->add_option("--seed", s.seed, "seed override");
    add_out(selftest);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3;
    }

    CLI::App* chosen = app.get_subcommands().front();
    s.out_given = chosen->count("--out") > 0;
    s.seed_given = chosen->get_option_no_throw("--seed") && chosen->count("--seed") > 0;
    s.q_given = chosen->get_option_no_throw("--q") && chosen->count("--q") > 0;
    s.r_given = chosen->get_option_no_throw("--r") && chosen->count("--r") > 0;
    const std::string name = chosen->get_name();

    try {
        if (name == "cell") return run_cell(s);
        if (name == "coeffs") return run_coeffs(s);
        if (name == "solve1d") return run_solve1d(s);
        if (name == "solve2d") return run_solve2d(s);
        if (name == "validate") return run_validate(s);
        if (name == "selftest") return run_selftest(s);
        const std::string study = name == "converge" ? "convergence" : name;
        return run_study_cmd(s, study);
    } catch (const th::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 3;
    } catch (const th::ParseError& e) {
        std::fprintf(stderr, "expression error: %s\n", e.what());
        return 3;
    } catch (const th::ValidationError& e) {
        std::fprintf(stderr, "validation failure: %s\n", e.what());
        return 1;
    } catch (const th::SolverError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
