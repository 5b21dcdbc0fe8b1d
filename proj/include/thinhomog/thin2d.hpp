#pragma once

#include "thinhomog/homog1d.hpp"
#include "thinhomog/plap.hpp"
#include "thinhomog/profile.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace thinhomog {

struct MeshPolicy {
    int points_per_period = 8; // columns per boundary oscillation period
    int min_layers = 6;
    int min_columns = 64;
    int max_columns = 16384;

    // Columns for the thin mesh at eps; eps*L-periodic oscillation resolved with
    // points_per_period columns, rounded up to a whole number per period.
    int columns_for(const Profile& profile, double eps) const;
};

struct EpsilonProblem {
    Profile profile;
    double eps = 0.25;
    double p = 2.0;
    std::function<double(double, double)> f; // right-hand side
    MeshPolicy policy;
};

struct EpsilonSolution {
    MeshPtr mesh;
    NodalField u;
    SolveReport report;
    int nx = 0, ny = 0;
    double u_w1p_triple = 0.0; // eps^{-1/p} |u|_{W^{1,p}}
    double f_lpp_triple = 0.0; // eps^{-1/p'} |f|_{L^{p'}}
    // |||u|||^{p-1} <= |||f||| + slack (a priori energy bound, slack 1e-6)
    bool energy_bound_ok = false;
    double energy_bound_slack = 0.0;
};

// Solves -div(a_p(grad u)) + a_p(u) = f with natural boundary conditions on the
// thin domain {0 < x < 1, 0 < y < eps G(x, x/eps)}.
EpsilonSolution solve_epsilon_problem(const EpsilonProblem& problem,
                                      const SolveConfig& config = {});

// Height of the mesh's polygonal top boundary above x (terrain meshes only).
double terrain_top(const Mesh& mesh, double x);

// Column average (1/(r(x) eps)) int_0^{eps G_eps(x)} u(x, y) dy on a uniform grid
// of m+1 nodes spanning [x_lo, x_hi]; vertical integral by 64-panel trapezoid.
Field1D column_average(const NodalField& u, const Profile& profile, double eps, int m,
                       double x_lo = 0.0, double x_hi = 1.0);

struct WeakDefect {
    std::string name;
    double value;
};

using TestFunction = std::pair<std::string, std::function<double(double)>>;

// {1, x, x^2, sin(pi x), cos(pi x)}
std::vector<TestFunction> default_test_functions();

// |int (a - b) phi dx| per test function, trapezoid on a's grid, b interpolated.
std::vector<WeakDefect> weak_compare(const Field1D& a, const Field1D& b,
                                     const std::vector<TestFunction>& tests);

// Periodic unfolding of a thin-domain field against a reference cell mesh:
// cell k covers x in [xi0 + k eps L, xi0 + (k+1) eps L), sample value at reference
// point (y1, y2) is u(cell_left + eps y1, eps y2); leftover region unfolds to 0.
struct UnfoldResult {
    double eps = 0.0, L = 0.0, xi0 = 0.0, xi1 = 1.0;
    int cells = 0;
    double leftover_width = 0.0;
    std::vector<double> ref_y1, ref_y2, ref_w; // cell quadrature (midpoint rule)
    std::vector<std::vector<double>> values;   // per cell, per quadrature point

    // Both sides of the integral identity (unfolded box integral vs. pulled-back
    // physical integral) evaluated over the same samples, and their defect.
    double integral_lhs = 0.0, integral_rhs = 0.0, integral_defect = 0.0;
    double norm_lhs = 0.0, norm_rhs = 0.0, norm_defect = 0.0; // L^p norm identity
    double shift_diagnostic = 0.0; // max |u(mapped) - u(cell left, same height)|
};

UnfoldResult unfold_periodic(const NodalField& u, const Mesh& cell_mesh, double eps,
                             double p = 0.0, double xi0 = 0.0, double xi1 = 1.0);

// || T u - u_limit ||_{L^p((xi0,xi1) x Y*)} with the leftover unfolding to zero.
double strong_unfold_defect(const UnfoldResult& unfolded, const Field1D& u_limit, double p);

struct BoxGrid {
    int nx = 32, ny1 = 16, ny2 = 16;
};

struct BoxSample {
    BoxGrid grid;
    double L = 0.0, height = 0.0;  // box (0,1) x (0,L) x (0,height)
    std::vector<double> values;    // x fastest to slowest: [k2][k1][i] flattened
};

// Locally periodic unfolding sampled on the box (0,1) x (0,L) x (0,G1), with the
// zero extension outside the physical domain.
BoxSample unfold_locally_periodic(const NodalField& u, const Profile& profile, double eps,
                                  const BoxGrid& grid = {});

struct LpIdentity {
    double lhs = 0.0, rhs = 0.0, defect = 0.0;
};

// Matched-quadrature integral identity for the locally periodic unfolding:
// (1/L) int_box T u = (1/eps) int_domain u. Requires 1/(eps L) integral and the
// mesh columns aligned with the cell boundaries.
LpIdentity lp_unfold_identity(const NodalField& u, double eps, double L);

// Vertical stretch: evaluates u at (x, y / (1 + eta)) on the target mesh, which
// must share the source x-grid. Exact for stretched-column targets.
NodalField apply_P(const NodalField& u, double eta, const MeshPtr& target);

struct DomainDependenceRecord {
    double eps = 0.0, p = 2.0;
    double delta_measured = 0.0;  // sup |G_eps - Ghat_eps| over the x-grid
    double d_intersection = 0.0;  // |||u - uhat|||^p on the common part
    double d_only_base = 0.0;     // |||u|||^p on R \ Rhat
    double d_only_hat = 0.0;      // |||uhat|||^p on Rhat \ R
    double d_total = 0.0;
    double u_norm = 0.0, uhat_norm = 0.0;   // |||.|||_{W^{1,p}}
    double f_norm = 0.0, f_norm_hat = 0.0;  // |||f|||_{L^{p'}} per domain
    bool energy_bounds_ok = false;
};

// Solves the same load on the domains of G and Ghat and measures how far the two
// solutions drift: intersection distance plus both leftover-strip energies.
DomainDependenceRecord domain_dependence(const Profile& G, const Profile& Ghat, double eps,
                                         const std::function<double(double, double)>& f, double p,
                                         const SolveConfig& config = {},
                                         const MeshPolicy& policy = {});

} // namespace thinhomog
