#include "thinhomog/plap.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace thinhomog {

namespace {

// Edge-midpoint quadrature: one point per edge, weight area/3, hat values 1/2 on
// the two edge ends and 0 opposite.
constexpr int kMidEdges[3][2] = {{0, 1}, {1, 2}, {2, 0}};

double reg_weight(double p, double gamma, double n2) {
    // (gamma^2 + n2)^{(p-2)/2}, safe at 0
    double s = gamma * gamma + n2;
    if (s == 0.0)
        return 0.0;
    return std::pow(s, 0.5 * (p - 2.0));
}

double reg_density(double p, double gamma, double n2) {
    // (1/p)(gamma^2 + n2)^{p/2}; at gamma=0 this is |v|^p / p
    double s = gamma * gamma + n2;
    if (s == 0.0)
        return 0.0;
    return std::pow(s, 0.5 * p) / p;
}

} // namespace

InequalitySuiteResult run_inequality_suite(double p, int pairs, std::uint64_t seed) {
    if (!(p > 1.0))
        throw std::runtime_error("run_inequality_suite: p must be > 1");
    InequalitySuiteResult res;
    res.p = p;
    res.pairs = pairs;
    res.min_coercivity = std::numeric_limits<double>::infinity();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> scale(-3.0, 3.0);

    for (int k = 0; k < pairs; ++k) {
        Vec2 x{gauss(rng) * std::pow(10.0, scale(rng)), gauss(rng) * std::pow(10.0, scale(rng))};
        Vec2 y{gauss(rng) * std::pow(10.0, scale(rng)), gauss(rng) * std::pow(10.0, scale(rng))};
        double gap = monotonicity_gap(x, y, p);
        double nx = norm(x), ny = norm(y), nd = norm(x - y);
        double mag = std::max({nx, ny, 1e-30});
        if (gap < -1e-12 * std::pow(mag, p))
            res.sign_violations++;

        if (nd > 0.0 && (nx > 0.0 || ny > 0.0)) {
            double denom = p >= 2.0 ? std::pow(nd, p) : nd * nd * std::pow(nx + ny, p - 2.0);
            if (denom > 0.0)
                res.min_coercivity = std::min(res.min_coercivity, gap / denom);
            double cont = p >= 2.0 ? nd * std::pow(nx + ny, p - 2.0) : std::pow(nd, p - 1.0);
            if (cont > 0.0)
                res.max_continuity =
                    std::max(res.max_continuity, norm(a_p(x, p) - a_p(y, p)) / cont);
        }

        // Convexity tangent bound at x in direction y.
        double lhs = std::pow(ny, p);
        double rhs = std::pow(nx, p) + p * dot(a_p(x, p), y - x);
        if (lhs - rhs < -1e-12 * std::max(lhs, std::pow(mag, p)))
            res.tangent_violations++;
    }

    // Continuity constants: p - 1 for p >= 2 (mean value bound), 2^{2-p} branch for
    // p < 2; allow a small randomized-search slack on top.
    double cont_bound = p >= 2.0 ? (p - 1.0) : std::pow(2.0, 2.0 - p);
    res.pass = res.sign_violations == 0 && res.tangent_violations == 0 &&
               res.min_coercivity > 0.0 && res.max_continuity <= cont_bound * (1.0 + 1e-9);
    return res;
}

void EnergySpec::validate() const {
    if (!mesh)
        throw std::runtime_error("EnergySpec: missing mesh");
    if (!(p > 1.0))
        throw std::runtime_error("EnergySpec: p must be > 1");
    if (!gradient_term && !mass_term)
        throw std::runtime_error("EnergySpec: energy has no terms");
    if (load && load_field)
        throw std::runtime_error("EnergySpec: give the load as a function or a field, not both");
    if (load_field && load_field->mesh.get() != mesh.get())
        throw std::runtime_error("EnergySpec: load field lives on a different mesh");
    if (!mass_term && constraint == Constraint::None)
        throw std::runtime_error(
            "EnergySpec: without a mass term the energy is constant-invariant; "
            "use a zero-mean constraint");
    if (constraint == Constraint::PeriodicZeroMean && mesh->periodic_pairs.empty())
        throw std::runtime_error("EnergySpec: periodic constraint on a non-periodic mesh");
}

namespace {

struct QuadPoint {
    Vec2 pos;
    double u;     // field value
    double f;     // load value (0 when absent)
    int a, b;     // dofs of the edge ends
};

// Visits the three edge-midpoint quadrature nodes of triangle t.
template <class Fn>
void for_midpoints(const EnergySpec& spec, const std::vector<double>& u, std::size_t t, Fn&& fn) {
    const Mesh& m = *spec.mesh;
    for (const auto& e : kMidEdges) {
        int na = m.tris[t][e[0]], nb = m.tris[t][e[1]];
        QuadPoint q;
        q.pos = 0.5 * (m.nodes[na] + m.nodes[nb]);
        q.a = m.node_dof[na];
        q.b = m.node_dof[nb];
        q.u = 0.5 * (u[q.a] + u[q.b]);
        q.f = 0.0;
        if (spec.load)
            q.f = spec.load(q.pos.x, q.pos.y);
        else if (spec.load_field)
            q.f = 0.5 * (spec.load_field->values[q.a] + spec.load_field->values[q.b]);
        fn(q);
    }
}

Vec2 tri_gradient(const EnergySpec& spec, const std::vector<double>& u, std::size_t t) {
    const Mesh& m = *spec.mesh;
    Vec2 g = spec.offset;
    for (int k = 0; k < 3; ++k) {
        double uk = u[m.node_dof[m.tris[t][k]]];
        g = g + uk * m.grad[t][k];
    }
    return g;
}

} // namespace

double assemble_energy(const EnergySpec& spec, const std::vector<double>& u, double gamma) {
    const Mesh& m = *spec.mesh;
    double E = 0.0;
    for (std::size_t t = 0; t < m.tris.size(); ++t) {
        double A = m.area[t];
        if (spec.gradient_term) {
            Vec2 g = tri_gradient(spec, u, t);
            E += A * reg_density(spec.p, gamma, dot(g, g));
        }
        if (spec.mass_term || spec.load || spec.load_field) {
            for_midpoints(spec, u, t, [&](const QuadPoint& q) {
                if (spec.mass_term)
                    E += (A / 3.0) * reg_density(spec.p, gamma, q.u * q.u);
                E -= (A / 3.0) * q.f * q.u;
            });
        }
    }
    return E;
}

std::vector<double> assemble_gradient(const EnergySpec& spec, const std::vector<double>& u,
                                      double gamma) {
    const Mesh& m = *spec.mesh;
    std::vector<double> out(m.dof_count, 0.0);
    for (std::size_t t = 0; t < m.tris.size(); ++t) {
        double A = m.area[t];
        if (spec.gradient_term) {
            Vec2 g = tri_gradient(spec, u, t);
            Vec2 flux = reg_weight(spec.p, gamma, dot(g, g)) * g;
            for (int k = 0; k < 3; ++k)
                out[m.node_dof[m.tris[t][k]]] += A * dot(flux, m.grad[t][k]);
        }
        if (spec.mass_term || spec.load || spec.load_field) {
            for_midpoints(spec, u, t, [&](const QuadPoint& q) {
                double w = A / 3.0;
                if (spec.mass_term) {
                    double s = reg_weight(spec.p, gamma, q.u * q.u) * q.u;
                    out[q.a] += w * s * 0.5;
                    out[q.b] += w * s * 0.5;
                }
                out[q.a] -= w * q.f * 0.5;
                out[q.b] -= w * q.f * 0.5;
            });
        }
    }
    return out;
}

SparseMatrix assemble_hessian(const EnergySpec& spec, const std::vector<double>& u, double gamma) {
    const Mesh& m = *spec.mesh;
    SparseMatrix H(m.dof_count);
    const double p = spec.p;
    for (std::size_t t = 0; t < m.tris.size(); ++t) {
        double A = m.area[t];
        if (spec.gradient_term) {
            Vec2 g = tri_gradient(spec, u, t);
            double n2 = dot(g, g);
            double w = reg_weight(p, gamma, n2);
            double w4 = (gamma * gamma + n2) == 0.0
                            ? 0.0
                            : std::pow(gamma * gamma + n2, 0.5 * (p - 4.0));
            // D[w(g) g] = w I + (p-2) (gamma^2+|g|^2)^{(p-4)/2} g g^T; SPD for p > 1
            double m00 = w + (p - 2.0) * w4 * g.x * g.x;
            double m01 = (p - 2.0) * w4 * g.x * g.y;
            double m11 = w + (p - 2.0) * w4 * g.y * g.y;
            for (int i = 0; i < 3; ++i) {
                int di = m.node_dof[m.tris[t][i]];
                for (int j = 0; j < 3; ++j) {
                    int dj = m.node_dof[m.tris[t][j]];
                    Vec2 gi = m.grad[t][i], gj = m.grad[t][j];
                    double v = gi.x * (m00 * gj.x + m01 * gj.y) + gi.y * (m01 * gj.x + m11 * gj.y);
                    H.add(di, dj, A * v);
                }
            }
        }
        if (spec.mass_term) {
            for_midpoints(spec, u, t, [&](const QuadPoint& q) {
                double s2 = gamma * gamma + q.u * q.u;
                double d = s2 == 0.0
                               ? 0.0
                               : std::pow(s2, 0.5 * (p - 4.0)) *
                                     (gamma * gamma + (p - 1.0) * q.u * q.u);
                double w = (A / 3.0) * d * 0.25;
                H.add(q.a, q.a, w);
                H.add(q.a, q.b, w);
                H.add(q.b, q.a, w);
                H.add(q.b, q.b, w);
            });
        }
    }
    H.compress();
    return H;
}

std::vector<double> lumped_weights(const Mesh& mesh) {
    std::vector<double> w(mesh.dof_count, 0.0);
    for (std::size_t t = 0; t < mesh.tris.size(); ++t)
        for (int k = 0; k < 3; ++k)
            w[mesh.node_dof[mesh.tris[t][k]]] += mesh.area[t] / 3.0;
    return w;
}

double field_mean(const NodalField& u) {
    std::vector<double> w = lumped_weights(*u.mesh);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < u.mesh->dof_count; ++i) {
        num += w[i] * u.values[i];
        den += w[i];
    }
    return den > 0.0 ? num / den : 0.0;
}

namespace {

class EnergyProblem : public NewtonProblem {
public:
    explicit EnergyProblem(const EnergySpec& spec) : spec_(spec) {
        if (spec_.constraint != EnergySpec::Constraint::None) {
            weights_ = lumped_weights(*spec_.mesh);
            total_ = 0.0;
            for (double w : weights_)
                total_ += w;
        }
    }

    int size() const override { return spec_.mesh->dof_count; }
    double energy(const std::vector<double>& u) const override {
        return assemble_energy(spec_, u, 0.0);
    }
    void gradient(const std::vector<double>& u, std::vector<double>& g) const override {
        g = assemble_gradient(spec_, u, 0.0);
    }
    SparseMatrix hessian(const std::vector<double>& u, double gamma) const override {
        return assemble_hessian(spec_, u, gamma);
    }
    double energy_reg(const std::vector<double>& u, double gamma) const override {
        return assemble_energy(spec_, u, gamma);
    }
    void gradient_reg(const std::vector<double>& u, double gamma,
                      std::vector<double>& g) const override {
        g = assemble_gradient(spec_, u, gamma);
    }
    bool constants_in_kernel() const override { return !spec_.mass_term; }
    void project(std::vector<double>& u) const override {
        if (spec_.constraint == EnergySpec::Constraint::None || total_ <= 0.0)
            return;
        double mean = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            mean += weights_[i] * u[i];
        mean /= total_;
        for (double& v : u)
            v -= mean;
    }

private:
    const EnergySpec& spec_;
    std::vector<double> weights_;
    double total_ = 0.0;
};

double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

} // namespace

std::vector<double> minimize_newton(const NewtonProblem& problem, const SolveConfig& config,
                                    std::vector<double> u, SolveReport& report) {
    auto t_start = std::chrono::steady_clock::now();
    report = SolveReport{};

    problem.project(u);
    std::vector<double> g;
    problem.gradient(u, g);
    double E = problem.energy(u);
    double gref = std::max(l2(g), 1e-300);
    report.energy_history.push_back(E);

    const bool deflate = problem.constants_in_kernel();
    const int n = problem.size();
    const int cg_max = std::max(16, config.cg_max_factor * n);

    auto converged = [&](double gnorm) {
        return gnorm <= config.grad_tol * gref || gnorm <= 1e-13 * (1.0 + std::fabs(E));
    };

    double gnorm = l2(g);
    bool done = converged(gnorm);

    for (double gamma = config.gamma_start; !done; gamma /= config.gamma_factor) {
        // Continuation stage: Newton on the smoothed energy E_gamma, whose
        // gradient matches the gamma-regularized Hessian, so each stage contracts
        // quadratically and warm-starts the next. The final stage polishes the
        // true gradient with the (barely) regularized Hessian.
        const bool final_stage = gamma <= config.gamma_min * config.gamma_factor;
        const int stage_cap = final_stage ? config.max_newton : config.max_stage_newton;

        auto stage_energy = [&](const std::vector<double>& v) {
            return final_stage ? problem.energy(v) : problem.energy_reg(v, gamma);
        };
        auto stage_gradient = [&](const std::vector<double>& v, std::vector<double>& out) {
            if (final_stage)
                problem.gradient(v, out);
            else
                problem.gradient_reg(v, gamma, out);
        };

        double Es;
        std::vector<double> gs;
        if (final_stage) {
            Es = E;
            gs = g;
        } else {
            Es = stage_energy(u);
            stage_gradient(u, gs);
        }
        double gsnorm = l2(gs);
        const double gs_ref = std::max(gsnorm, gref);
        auto stage_done = [&] {
            if (final_stage)
                return false; // runs on the global criterion and budget
            return gsnorm <= config.stage_tol * gs_ref || gsnorm <= 1e-13 * (1.0 + std::fabs(Es));
        };

        int stage_its = 0;
        while (!done && !stage_done() && stage_its < stage_cap &&
               report.newton_iterations < config.max_newton) {
            SparseMatrix H = problem.hessian(u, gamma);
            std::vector<double> rhs(n);
            for (int i = 0; i < n; ++i)
                rhs[i] = -gs[i];
            std::vector<double> d;
            CgResult cg = pcg(H, rhs, d, config.cg_tol, cg_max, deflate);
            report.cg_total_iterations += cg.iterations;
            if (!cg.converged)
                report.cg_failed = true;

            double slope = 0.0;
            for (int i = 0; i < n; ++i)
                slope += gs[i] * d[i];
            if (!(slope < 0.0)) {
                // Not a descent direction (numerically exhausted); stop this stage.
                break;
            }

            // Energy differences below this are roundoff; near the minimum the
            // Armijo test turns into noise, so acceptance falls back to a plain
            // gradient-norm reduction.
            const double noise = 1e-14 * (1.0 + std::fabs(Es));
            double step = 1.0;
            std::vector<double> trial(n), gs_trial;
            double Es_trial = 0.0;
            bool accepted = false, have_gradient = false;
            while (step >= config.min_step) {
                for (int i = 0; i < n; ++i)
                    trial[i] = u[i] + step * d[i];
                problem.project(trial);
                Es_trial = stage_energy(trial);
                if (Es_trial <= Es + config.armijo_slope * step * slope) {
                    accepted = true;
                    break;
                }
                if (-step * slope <= noise && Es_trial <= Es + noise) {
                    stage_gradient(trial, gs_trial);
                    if (l2(gs_trial) <= 0.9 * gsnorm) {
                        accepted = true;
                        have_gradient = true;
                        break;
                    }
                }
                step *= config.backtrack;
            }
            if (!accepted) {
                if (final_stage)
                    report.line_search_failed = true;
                break;
            }

            u.swap(trial);
            Es = Es_trial;
            if (have_gradient)
                gs.swap(gs_trial);
            else
                stage_gradient(u, gs);
            gsnorm = l2(gs);
            report.newton_iterations++;
            stage_its++;
            report.energy_history.push_back(Es);
            report.step_sizes.push_back(step);
            if (final_stage) {
                E = Es;
                g = gs;
                gnorm = gsnorm;
                done = converged(gnorm);
            }
        }
        report.stage_iterations.push_back(stage_its);
        if (!final_stage) {
            problem.gradient(u, g);
            gnorm = l2(g);
            E = problem.energy(u);
            done = converged(gnorm);
        }
        if (gamma <= config.gamma_min || report.newton_iterations >= config.max_newton)
            break;
    }

    report.converged = converged(gnorm);
    report.grad_norm = gnorm;
    report.grad_norm_rel = gnorm / gref;
    report.energy = E;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return u;
}

std::pair<NodalField, SolveReport> minimize(const EnergySpec& spec, const SolveConfig& config,
                                            const NodalField& initial) {
    spec.validate();
    if (initial.mesh.get() != spec.mesh.get())
        throw std::runtime_error("minimize: initial field lives on a different mesh");

    EnergyProblem problem(spec);
    SolveReport report;
    std::vector<double> u = minimize_newton(problem, config, initial.values, report);

    NodalField out;
    out.mesh = spec.mesh;
    out.values = std::move(u);
    out.p = spec.p;
    out.role = "minimizer";
    return {std::move(out), report};
}

NormReport norms(const NodalField& u, double p, double eps) {
    const Mesh& m = *u.mesh;
    double mass = 0.0, grad = 0.0;
    for (std::size_t t = 0; t < m.tris.size(); ++t) {
        double A = m.area[t];
        Vec2 g{0.0, 0.0};
        for (int k = 0; k < 3; ++k)
            g = g + u.values[m.node_dof[m.tris[t][k]]] * m.grad[t][k];
        grad += A * std::pow(dot(g, g), 0.5 * p);
        for (const auto& e : kMidEdges) {
            int na = m.tris[t][e[0]], nb = m.tris[t][e[1]];
            double uv = 0.5 * (u.values[m.node_dof[na]] + u.values[m.node_dof[nb]]);
            mass += (A / 3.0) * std::pow(std::fabs(uv), p);
        }
    }
    NormReport r;
    r.lp = std::pow(mass, 1.0 / p);
    r.grad_lp = std::pow(grad, 1.0 / p);
    r.w1p = std::pow(mass + grad, 1.0 / p);
    if (eps > 0.0) {
        double s = std::pow(eps, -1.0 / p);
        r.lp_triple = s * r.lp;
        r.w1p_triple = s * r.w1p;
    }
    return r;
}

double lq_norm_function(const Mesh& mesh, const std::function<double(double, double)>& f,
                        double q) {
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
        double A = mesh.area[t];
        for (const auto& e : kMidEdges) {
            Vec2 pos = 0.5 * (mesh.nodes[mesh.tris[t][e[0]]] + mesh.nodes[mesh.tris[t][e[1]]]);
            s += (A / 3.0) * std::pow(std::fabs(f(pos.x, pos.y)), q);
        }
    }
    return std::pow(s, 1.0 / q);
}

double w1p_eta_pth_power(const NodalField& u, double p, double eta) {
    const Mesh& m = *u.mesh;
    double mass = 0.0, grad = 0.0;
    for (std::size_t t = 0; t < m.tris.size(); ++t) {
        double A = m.area[t];
        Vec2 g{0.0, 0.0};
        for (int k = 0; k < 3; ++k)
            g = g + u.values[m.node_dof[m.tris[t][k]]] * m.grad[t][k];
        Vec2 kg{g.x, (1.0 + eta) * g.y};
        grad += A * std::pow(dot(kg, kg), 0.5 * p);
        for (const auto& e : kMidEdges) {
            int na = m.tris[t][e[0]], nb = m.tris[t][e[1]];
            double uv = 0.5 * (u.values[m.node_dof[na]] + u.values[m.node_dof[nb]]);
            mass += (A / 3.0) * std::pow(std::fabs(uv), p);
        }
    }
    return (mass + grad) / (1.0 + eta);
}

double w1p_pth_power(const NodalField& u, double p) {
    NormReport r = norms(u, p);
    return std::pow(r.lp, p) + std::pow(r.grad_lp, p);
}

} // namespace thinhomog
