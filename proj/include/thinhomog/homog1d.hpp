#pragma once

#include "thinhomog/cell.hpp"
#include "thinhomog/plap.hpp"

#include <functional>
#include <vector>

namespace thinhomog {

// Values on a uniform node grid over [a, b]; linear interpolation in between,
// constant extension outside.
struct Field1D {
    double a = 0.0, b = 1.0;
    std::vector<double> values;

    int intervals() const { return static_cast<int>(values.size()) - 1; }
    double x(int i) const { return a + (b - a) * i / intervals(); }
    double operator()(double xq) const;
};

// Piecewise-linear interpolation through positive coefficient samples, constant
// extension beyond the sample range. Positivity of samples is required.
class CoefficientTable {
public:
    CoefficientTable(std::vector<double> x, std::vector<double> v, const char* what);
    double operator()(double xq) const;

private:
    std::vector<double> x_, v_;
};

// fhat(x) = r(x) f(x) sampled on the n+1 node solver grid.
Field1D fhat_from(const std::function<double(double)>& f, const EffectiveCoefficients& coeffs,
                  int n);

struct Solve1DResult {
    Field1D u;
    SolveReport report;
};

// P1 solve of the homogenized problem on [0, 1] with natural boundary conditions:
// int q a_p(u') phi' + r a_p(u) phi = int fhat phi for all phi. Coefficients are
// evaluated at element midpoints; mass and load use 2-point Gauss per element.
Solve1DResult solve_homogenized(const EffectiveCoefficients& coeffs, const Field1D& fhat,
                                double p, int n, const SolveConfig& config = {});
Solve1DResult solve_homogenized(const CoefficientTable& q, const CoefficientTable& r,
                                const std::function<double(double)>& fhat, double p, int n,
                                const SolveConfig& config = {});

struct Norm1D {
    double lp = 0.0;
    double grad_lp = 0.0;
    double w1p = 0.0;
};

Norm1D norms_1d(const Field1D& u, double p);

} // namespace thinhomog
