#pragma once

#include "thinhomog/plap.hpp"
#include "thinhomog/profile.hpp"

#include <cstdint>
#include <vector>

namespace thinhomog {

struct CellResolution {
    int n1 = 64; // columns across the period
    int n2 = 64; // vertical layers
};

// One periodic cell solve at slow position x: minimize (1/p) int |e1 + grad psi|^p
// over periodic zero-mean psi on {0 < y1 < L, 0 < y2 < G(x, y1)}.
struct CellSolution {
    MeshPtr mesh;
    NodalField psi;              // periodic corrector, quadrature mean 0
    std::vector<double> v_nodes; // full solution y1 + psi per geometric node
    double q_flux = 0.0;         // (1/L) int a_p(e1 + grad psi) . e1
    double q_energy = 0.0;       // (1/L) int |e1 + grad psi|^p
    double r = 0.0;              // mean height |Y*(x)| / L
    double p = 2.0;
    double x = 0.0;
    SolveReport report;
};

CellSolution solve_cell(const Profile& profile, double x, double p, CellResolution res = {},
                        const SolveConfig& config = {});

// Mean height (1/L) int_0^L G(x, y) dy, composite 4-point Gauss-Legendre, 64 panels.
double effective_r(const Profile& profile, double x);

struct EffectiveCoefficients {
    std::vector<double> x, q, r;
    double p = 2.0;
    int n1 = 0, n2 = 0;
    std::uint64_t profile_hash = 0;
    int solves_performed = 0; // cell solves this call actually ran (cache misses)
};

// q/r sampled over x_grid. Results are cached on (profile hash, x rounded to 1e-12,
// p, resolution); x-independent profiles and piecewise intervals collapse to one
// representative solve each.
EffectiveCoefficients sample_coefficients(const Profile& profile,
                                          const std::vector<double>& x_grid, double p,
                                          CellResolution res = {}, const SolveConfig& config = {});
EffectiveCoefficients sample_coefficients(const PiecewiseProfile& profile,
                                          const std::vector<double>& x_grid, double p,
                                          CellResolution res = {}, const SolveConfig& config = {});

void clear_coefficient_cache();

} // namespace thinhomog
