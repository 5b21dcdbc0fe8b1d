#pragma once

#include "thinhomog/mesh.hpp"
#include "thinhomog/sparse.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace thinhomog {

// A solve ended without meeting its tolerance (Newton stalled, line search died).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// a_p(v) = |v|^{p-2} v with a_p(0) = 0; computed through |v|^{p-1} * unit(v) so
// 1 < p < 2 stays finite for denormal inputs.
inline Vec2 a_p(Vec2 v, double p) {
    double n = norm(v);
    if (n == 0.0)
        return {0.0, 0.0};
    double s = std::pow(n, p - 1.0);
    return {s * (v.x / n), s * (v.y / n)};
}

inline double a_p(double v, double p) {
    if (v == 0.0)
        return 0.0;
    return std::copysign(std::pow(std::fabs(v), p - 1.0), v);
}

inline double monotonicity_gap(Vec2 x, Vec2 y, double p) {
    return dot(a_p(x, p) - a_p(y, p), x - y);
}

// Randomized verification of the structure inequalities behind the solver:
// the monotonicity gap sign, its p-dependent coercivity ratio, the Hoelder/Lipschitz
// ratio of a_p differences, and the convexity tangent bound
// |y|^p >= |x|^p + p a_p(x).(y-x).
struct InequalitySuiteResult {
    double p = 0.0;
    int pairs = 0;
    int sign_violations = 0;      // gap < -1e-12 * scale
    int tangent_violations = 0;   // convexity bound failures beyond 1e-12 * scale
    double min_coercivity = 0.0;  // empirical c_p, must stay positive
    double max_continuity = 0.0;  // empirical continuity constant of a_p
    bool pass = false;
};

InequalitySuiteResult run_inequality_suite(double p, int pairs, std::uint64_t seed);

// Discrete energy on a mesh:
//   (1/p) int |offset + grad u|^p   [gradient_term]
// + (1/p) int |u|^p                 [mass_term]
// -       int f u                   [load]
// Gradient contributions are exact per triangle; mass and load use the 3-point
// edge-midpoint rule (exact for quadratics).
struct EnergySpec {
    MeshPtr mesh;
    double p = 2.0;
    bool gradient_term = true;
    bool mass_term = false;
    Vec2 offset{0.0, 0.0};
    std::function<double(double, double)> load;  // empty: no load
    std::optional<NodalField> load_field;        // alternative P1 load

    enum class Constraint { None, ZeroMean, PeriodicZeroMean };
    Constraint constraint = Constraint::None;

    void validate() const;
};

// gamma > 0 swaps |v|^{p-2} for the regularized weight (gamma^2 + |v|^2)^{(p-2)/2}
// in all three assemblies (they stay exact derivatives of one another).
double assemble_energy(const EnergySpec& spec, const std::vector<double>& u, double gamma = 0.0);
std::vector<double> assemble_gradient(const EnergySpec& spec, const std::vector<double>& u,
                                      double gamma = 0.0);
SparseMatrix assemble_hessian(const EnergySpec& spec, const std::vector<double>& u, double gamma);

struct SolveConfig {
    double grad_tol = 1e-10;   // relative to the initial gradient norm
    int max_newton = 200;      // total Newton iterations across all stages
    int max_stage_newton = 25; // cap per continuation stage before gamma drops
    double stage_tol = 1e-8;   // relative stage-gradient tolerance per gamma
    double gamma_start = 1e-1;
    double gamma_min = 1e-8;
    double gamma_factor = 10.0;
    double armijo_slope = 1e-4;
    double backtrack = 0.5;
    double min_step = 1e-12;
    double cg_tol = 1e-12;
    int cg_max_factor = 10;    // CG iteration cap = factor * dofs
};

struct SolveReport {
    bool converged = false;
    int newton_iterations = 0;
    double grad_norm = 0.0;     // final l2 norm of the true gradient
    double grad_norm_rel = 0.0;
    double energy = 0.0;
    std::vector<double> energy_history; // energies of accepted iterates, start included
    std::vector<int> stage_iterations;  // Newton steps taken per gamma stage
    std::vector<double> step_sizes;
    int cg_total_iterations = 0;
    bool cg_failed = false;
    bool line_search_failed = false;
    double wall_seconds = 0.0;
};

// Problem interface for the damped Newton driver; energy/gradient are the true
// (unregularized) quantities, the Hessian may be regularized by gamma. The _reg
// variants are the smoothed stage objective of the continuation; the defaults
// fall back to the true quantities (then stages only precondition).
class NewtonProblem {
public:
    virtual ~NewtonProblem() = default;
    virtual int size() const = 0;
    virtual double energy(const std::vector<double>& u) const = 0;
    virtual void gradient(const std::vector<double>& u, std::vector<double>& g) const = 0;
    virtual SparseMatrix hessian(const std::vector<double>& u, double gamma) const = 0;
    virtual double energy_reg(const std::vector<double>& u, double gamma) const {
        (void)gamma;
        return energy(u);
    }
    virtual void gradient_reg(const std::vector<double>& u, double gamma,
                              std::vector<double>& g) const {
        (void)gamma;
        gradient(u, g);
    }
    // True when constants span the null space (deflate CG, re-gauge after steps).
    virtual bool constants_in_kernel() const { return false; }
    virtual void project(std::vector<double>& u) const { (void)u; }
};

std::vector<double> minimize_newton(const NewtonProblem& problem, const SolveConfig& config,
                                    std::vector<double> u0, SolveReport& report);

std::pair<NodalField, SolveReport> minimize(const EnergySpec& spec, const SolveConfig& config,
                                            const NodalField& initial);

// Quadrature mean (exact for P1) and dof weights w_i = int hat_i.
std::vector<double> lumped_weights(const Mesh& mesh);
double field_mean(const NodalField& u);

struct NormReport {
    double lp = 0.0;
    double grad_lp = 0.0;
    double w1p = 0.0;        // (lp^p + grad_lp^p)^{1/p}
    double lp_triple = 0.0;  // eps^{-1/p} scaled variants (0 when eps unset)
    double w1p_triple = 0.0;
};

NormReport norms(const NodalField& u, double p, double eps = 0.0);

// L^q norm of a plain function over the mesh, same edge-midpoint quadrature.
double lq_norm_function(const Mesh& mesh, const std::function<double(double, double)>& f,
                        double q);

// Vertically weighted seminorm behind the stretch operator:
// (1/(1+eta)) [ int |u|^p + int |diag(1, 1+eta) grad u|^p ]   (p-th power).
double w1p_eta_pth_power(const NodalField& u, double p, double eta);

// Plain p-th powers used by the domain-dependence distance.
double w1p_pth_power(const NodalField& u, double p);

} // namespace thinhomog
