#include "thinhomog/thin2d.hpp"

#include "thinhomog/cell.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace thinhomog {

namespace {

constexpr double kPi = 3.14159265358979323846;

double eval_clamped(const NodalField& u, double x, double y) {
    // Points marginally above the polygonal top (curve vs. chord) drop onto it.
    double top = terrain_top(*u.mesh, x);
    return evaluate(u, {x, std::min(y, top)}, 1e-9);
}

} // namespace

int MeshPolicy::columns_for(const Profile& profile, double eps) const {
    bool oscillating = false;
    for (const Expr& e : profile.pieces)
        if (e.depends_on_y())
            oscillating = true;
    int nx = min_columns;
    if (oscillating) {
        double periods = 1.0 / (eps * profile.L);
        int per = std::max(points_per_period, 1);
        nx = std::max(nx, static_cast<int>(std::ceil(periods)) * per);
    }
    if (nx > max_columns)
        throw std::runtime_error("MeshPolicy: required columns exceed max_columns");
    return nx;
}

EpsilonSolution solve_epsilon_problem(const EpsilonProblem& problem, const SolveConfig& config) {
    if (!(problem.eps > 0.0))
        throw std::runtime_error("solve_epsilon_problem: eps must be positive");
    if (!problem.f)
        throw std::runtime_error("solve_epsilon_problem: missing right-hand side");

    EpsilonSolution sol;
    sol.nx = problem.policy.columns_for(problem.profile, problem.eps);
    sol.ny = std::max(problem.policy.min_layers, 6);
    const double eps = problem.eps;
    const Profile& G = problem.profile;
    sol.mesh = build_graph_mesh([&](double x) { return eps * G.value_eps(x, eps); }, 0.0, 1.0,
                                sol.nx, sol.ny, /*periodic=*/false);

    EnergySpec spec;
    spec.mesh = sol.mesh;
    spec.p = problem.p;
    spec.gradient_term = true;
    spec.mass_term = true;
    spec.load = problem.f;

    NodalField zero = make_field(sol.mesh, 0.0, problem.p, "thin-domain solution");
    auto [u, report] = minimize(spec, config, zero);
    if (!report.converged)
        throw SolverError("thin-domain solve did not converge at eps=" + std::to_string(eps) +
                          ", p=" + std::to_string(problem.p));
    sol.u = std::move(u);
    sol.report = report;

    const double p = problem.p;
    const double pp = p / (p - 1.0);
    NormReport un = norms(sol.u, p, eps);
    sol.u_w1p_triple = un.w1p_triple;
    sol.f_lpp_triple = std::pow(eps, -1.0 / pp) * lq_norm_function(*sol.mesh, problem.f, pp);
    sol.energy_bound_slack = 1e-6;
    sol.energy_bound_ok =
        std::pow(sol.u_w1p_triple, p - 1.0) <= sol.f_lpp_triple + sol.energy_bound_slack;
    return sol;
}

double terrain_top(const Mesh& mesh, double x) {
    if (mesh.grid_nx <= 0)
        throw std::runtime_error("terrain_top: mesh lacks structured provenance");
    double dx = (mesh.x_hi - mesh.x_lo) / mesh.grid_nx;
    double t = (x - mesh.x_lo) / dx;
    int i = std::clamp(static_cast<int>(t), 0, mesh.grid_nx - 1);
    double s = std::clamp(t - i, 0.0, 1.0);
    auto top_node = [&](int col) { return mesh.nodes[col * (mesh.grid_ny + 1) + mesh.grid_ny].y; };
    return (1.0 - s) * top_node(i) + s * top_node(i + 1);
}

Field1D column_average(const NodalField& u, const Profile& profile, double eps, int m,
                       double x_lo, double x_hi) {
    if (m < 2)
        throw std::runtime_error("column_average: need at least 2 intervals");
    if (!(x_lo >= 0.0 && x_hi <= 1.0 && x_hi > x_lo))
        throw std::runtime_error("column_average: grid must sit inside [0, 1]");

    const int panels = 64;
    Field1D out;
    out.a = x_lo;
    out.b = x_hi;
    out.values.resize(m + 1);
    for (int k = 0; k <= m; ++k) {
        double x = x_lo + (x_hi - x_lo) * k / m;
        double height = eps * profile.value_eps(x, eps);
        double sum = 0.0;
        for (int j = 0; j <= panels; ++j) {
            double y = height * j / panels;
            double w = (j == 0 || j == panels) ? 0.5 : 1.0;
            sum += w * eval_clamped(u, x, y);
        }
        double integral = sum * height / panels;
        double r = effective_r(profile, x);
        out.values[k] = integral / (r * eps);
    }
    return out;
}

std::vector<TestFunction> default_test_functions() {
    return {
        {"one", [](double) { return 1.0; }},
        {"x", [](double x) { return x; }},
        {"x^2", [](double x) { return x * x; }},
        {"sin(pi x)", [](double x) { return std::sin(kPi * x); }},
        {"cos(pi x)", [](double x) { return std::cos(kPi * x); }},
    };
}

std::vector<WeakDefect> weak_compare(const Field1D& a, const Field1D& b,
                                     const std::vector<TestFunction>& tests) {
    int n = a.intervals();
    double h = (a.b - a.a) / n;
    std::vector<WeakDefect> out;
    for (const auto& [name, phi] : tests) {
        double s = 0.0;
        for (int i = 0; i <= n; ++i) {
            double x = a.x(i);
            double w = (i == 0 || i == n) ? 0.5 : 1.0;
            s += w * h * (a.values[i] - b(x)) * phi(x);
        }
        out.push_back({name, std::fabs(s)});
    }
    return out;
}

UnfoldResult unfold_periodic(const NodalField& u, const Mesh& cell_mesh, double eps, double p,
                             double xi0, double xi1) {
    if (cell_mesh.grid_nx <= 0)
        throw std::runtime_error("unfold_periodic: cell mesh lacks structured provenance");
    if (p <= 0.0)
        p = u.p;

    UnfoldResult res;
    res.eps = eps;
    res.L = cell_mesh.x_hi - cell_mesh.x_lo;
    res.xi0 = xi0;
    res.xi1 = xi1;
    const double cell_width = eps * res.L;
    res.cells = static_cast<int>(std::floor((xi1 - xi0) / cell_width + 1e-9));
    res.leftover_width = (xi1 - xi0) - res.cells * cell_width;
    if (res.leftover_width < 1e-12)
        res.leftover_width = 0.0;

    // Reference quadrature: edge midpoints, weight area/3, on the cell mesh.
    for (std::size_t t = 0; t < cell_mesh.tris.size(); ++t) {
        for (int e = 0; e < 3; ++e) {
            Vec2 a = cell_mesh.nodes[cell_mesh.tris[t][e]];
            Vec2 b = cell_mesh.nodes[cell_mesh.tris[t][(e + 1) % 3]];
            res.ref_y1.push_back(0.5 * (a.x + b.x) - cell_mesh.x_lo);
            res.ref_y2.push_back(0.5 * (a.y + b.y));
            res.ref_w.push_back(cell_mesh.area[t] / 3.0);
        }
    }

    res.values.resize(res.cells);
    res.shift_diagnostic = 0.0;
    for (int k = 0; k < res.cells; ++k) {
        double x_left = xi0 + k * cell_width;
        auto& vals = res.values[k];
        vals.resize(res.ref_w.size());
        for (std::size_t q = 0; q < res.ref_w.size(); ++q) {
            double X = x_left + eps * res.ref_y1[q];
            double Y = eps * res.ref_y2[q];
            vals[q] = eval_clamped(u, X, Y);
            double at_left = eval_clamped(u, x_left, Y);
            res.shift_diagnostic = std::max(res.shift_diagnostic, std::fabs(vals[q] - at_left));
        }
    }

    // Integral identity: unfolded box integral vs. pulled-back domain integral,
    // identical samples arranged both ways.
    double lhs = 0.0, rhs = 0.0, lhs_p = 0.0, rhs_p = 0.0;
    for (int k = 0; k < res.cells; ++k) {
        double cell_sum = 0.0, cell_sum_p = 0.0, cell_phys = 0.0, cell_phys_p = 0.0;
        for (std::size_t q = 0; q < res.ref_w.size(); ++q) {
            double v = res.values[k][q];
            cell_sum += res.ref_w[q] * v;
            cell_sum_p += res.ref_w[q] * std::pow(std::fabs(v), p);
            cell_phys += (eps * eps * res.ref_w[q]) * v;
            cell_phys_p += (eps * eps * res.ref_w[q]) * std::pow(std::fabs(v), p);
        }
        lhs += cell_width * cell_sum;
        rhs += cell_phys;
        lhs_p += cell_width * cell_sum_p;
        rhs_p += cell_phys_p;
    }
    res.integral_lhs = lhs / res.L;
    res.integral_rhs = rhs / eps;
    res.integral_defect =
        std::fabs(res.integral_lhs - res.integral_rhs) / std::max(1.0, std::fabs(res.integral_lhs));
    res.norm_lhs = std::pow(lhs_p, 1.0 / p);
    res.norm_rhs = std::pow(res.L / eps * rhs_p, 1.0 / p);
    res.norm_defect = std::fabs(res.norm_lhs - res.norm_rhs) / std::max(1.0, res.norm_lhs);
    return res;
}

double strong_unfold_defect(const UnfoldResult& unfolded, const Field1D& u_limit, double p) {
    const double cell_width = unfolded.eps * unfolded.L;
    double acc = 0.0;
    // 2-point Gauss in x inside each cell; the unfolded samples are x-constant there.
    const double g0 = 0.21132486540518711775, g1 = 0.78867513459481288225;
    for (int k = 0; k < unfolded.cells; ++k) {
        double x_left = unfolded.xi0 + k * cell_width;
        for (double g : {g0, g1}) {
            double x = x_left + g * cell_width;
            double ux = u_limit(x);
            double s = 0.0;
            for (std::size_t q = 0; q < unfolded.ref_w.size(); ++q)
                s += unfolded.ref_w[q] * std::pow(std::fabs(unfolded.values[k][q] - ux), p);
            acc += 0.5 * cell_width * s;
        }
    }
    if (unfolded.leftover_width > 0.0) {
        // The unfolding vanishes there, so the defect integrand is |u_limit|^p.
        double cell_area = 0.0;
        for (double w : unfolded.ref_w)
            cell_area += w;
        double x0 = unfolded.xi0 + unfolded.cells * cell_width;
        const int nseg = 16;
        double seg = unfolded.leftover_width / nseg;
        for (int i = 0; i < nseg; ++i) {
            double x = x0 + (i + 0.5) * seg;
            acc += seg * cell_area * std::pow(std::fabs(u_limit(x)), p);
        }
    }
    return std::pow(acc, 1.0 / p);
}

BoxSample unfold_locally_periodic(const NodalField& u, const Profile& profile, double eps,
                                  const BoxGrid& grid) {
    BoxSample out;
    out.grid = grid;
    out.L = profile.L;
    out.height = profile.G1;
    out.values.assign(static_cast<std::size_t>(grid.nx) * grid.ny1 * grid.ny2, 0.0);
    const double cell_width = eps * profile.L;
    for (int k2 = 0; k2 < grid.ny2; ++k2) {
        double y2 = (k2 + 0.5) * out.height / grid.ny2;
        for (int k1 = 0; k1 < grid.ny1; ++k1) {
            double y1 = (k1 + 0.5) * out.L / grid.ny1;
            for (int i = 0; i < grid.nx; ++i) {
                double x = (i + 0.5) / grid.nx;
                double X = std::floor(x / cell_width) * cell_width + eps * y1;
                double Y = eps * y2;
                double v = 0.0;
                if (X <= 1.0) {
                    double top = terrain_top(*u.mesh, X);
                    if (Y <= top)
                        v = evaluate(u, {X, Y}, 1e-9);
                }
                out.values[(static_cast<std::size_t>(k2) * grid.ny1 + k1) * grid.nx + i] = v;
            }
        }
    }
    return out;
}

LpIdentity lp_unfold_identity(const NodalField& u, double eps, double L) {
    const Mesh& m = *u.mesh;
    if (m.grid_nx <= 0)
        throw std::runtime_error("lp_unfold_identity: mesh lacks structured provenance");
    double cells_real = (m.x_hi - m.x_lo) / (eps * L);
    int cells = static_cast<int>(std::llround(cells_real));
    if (std::fabs(cells_real - cells) > 1e-9 || cells < 1)
        throw std::runtime_error("lp_unfold_identity: 1/(eps L) must be an integer");
    if (m.grid_nx % cells != 0)
        throw std::runtime_error("lp_unfold_identity: mesh columns must align with cells");

    const double cell_width = eps * L;
    std::vector<double> cell_sum(cells, 0.0);
    double domain_sum = 0.0;
    for (std::size_t t = 0; t < m.tris.size(); ++t) {
        double cx = (m.nodes[m.tris[t][0]].x + m.nodes[m.tris[t][1]].x + m.nodes[m.tris[t][2]].x) / 3.0;
        int k = std::clamp(static_cast<int>((cx - m.x_lo) / cell_width), 0, cells - 1);
        double s = 0.0;
        for (int e = 0; e < 3; ++e) {
            int na = m.tris[t][e], nb = m.tris[t][(e + 1) % 3];
            s += (m.area[t] / 3.0) * 0.5 * (u.at_node(na) + u.at_node(nb));
        }
        cell_sum[k] += s / (eps * eps); // pull back to reference coordinates
        domain_sum += s;
    }
    LpIdentity id;
    double lhs = 0.0;
    for (int k = 0; k < cells; ++k)
        lhs += cell_width * cell_sum[k];
    id.lhs = lhs / L;
    id.rhs = domain_sum / eps;
    id.defect = std::fabs(id.lhs - id.rhs) / std::max(1.0, std::fabs(id.lhs));
    return id;
}

NodalField apply_P(const NodalField& u, double eta, const MeshPtr& target) {
    if (!(eta >= 0.0))
        throw std::runtime_error("apply_P: eta must be >= 0");
    const Mesh& src = *u.mesh;
    const Mesh& dst = *target;
    if (src.grid_nx <= 0 || dst.grid_nx <= 0 || src.grid_nx != dst.grid_nx ||
        std::fabs(src.x_lo - dst.x_lo) > 1e-12 || std::fabs(src.x_hi - dst.x_hi) > 1e-12)
        throw std::runtime_error("apply_P: target must share the source x-grid");

    NodalField out = make_field(target, 0.0, u.p, u.role);
    for (int d = 0; d < dst.dof_count; ++d) {
        Vec2 pos = dst.nodes[dst.dof_node()[d]];
        out.values[d] = eval_clamped(u, pos.x, pos.y / (1.0 + eta));
    }
    return out;
}

DomainDependenceRecord domain_dependence(const Profile& G, const Profile& Ghat, double eps,
                                         const std::function<double(double, double)>& f, double p,
                                         const SolveConfig& config, const MeshPolicy& policy) {
    DomainDependenceRecord rec;
    rec.eps = eps;
    rec.p = p;

    EpsilonProblem base{G, eps, p, f, policy};
    EpsilonProblem hat{Ghat, eps, p, f, policy};
    // Shared resolution so the comparison meshes share columns with both solves.
    int nx = std::max(policy.columns_for(G, eps), policy.columns_for(Ghat, eps));
    MeshPolicy shared = policy;
    shared.min_columns = nx;
    base.policy = shared;
    hat.policy = shared;

    EpsilonSolution su = solve_epsilon_problem(base, config);
    EpsilonSolution sh = solve_epsilon_problem(hat, config);
    rec.u_norm = su.u_w1p_triple;
    rec.uhat_norm = sh.u_w1p_triple;
    rec.f_norm = su.f_lpp_triple;
    rec.f_norm_hat = sh.f_lpp_triple;
    rec.energy_bounds_ok = su.energy_bound_ok && sh.energy_bound_ok;

    auto hG = [&](double x) { return eps * G.value_eps(x, eps); };
    auto hH = [&](double x) { return eps * Ghat.value_eps(x, eps); };
    auto hMin = [&](double x) { return std::min(hG(x), hH(x)); };

    for (int i = 0; i <= 4 * nx; ++i) {
        double x = static_cast<double>(i) / (4 * nx);
        rec.delta_measured =
            std::max(rec.delta_measured, std::fabs(G.value_eps(x, eps) - Ghat.value_eps(x, eps)));
    }

    int ny = std::max(policy.min_layers, 6);
    MeshPtr common = build_graph_mesh(hMin, 0.0, 1.0, nx, ny, false);
    NodalField u_c = interpolate(su.u, common);
    NodalField h_c = interpolate(sh.u, common);
    NodalField diff = make_field(common, 0.0, p, "difference");
    for (int d = 0; d < common->dof_count; ++d)
        diff.values[d] = u_c.values[d] - h_c.values[d];
    rec.d_intersection = w1p_pth_power(diff, p) / eps;

    MeshPtr strip_base = build_strip_mesh(hMin, hG, 0.0, 1.0, nx, ny);
    if (strip_base->triangle_count() > 0) {
        NodalField u_s = interpolate(su.u, strip_base);
        rec.d_only_base = w1p_pth_power(u_s, p) / eps;
    }
    MeshPtr strip_hat = build_strip_mesh(hMin, hH, 0.0, 1.0, nx, ny);
    if (strip_hat->triangle_count() > 0) {
        NodalField h_s = interpolate(sh.u, strip_hat);
        rec.d_only_hat = w1p_pth_power(h_s, p) / eps;
    }
    rec.d_total = rec.d_intersection + rec.d_only_base + rec.d_only_hat;
    return rec;
}

} // namespace thinhomog
