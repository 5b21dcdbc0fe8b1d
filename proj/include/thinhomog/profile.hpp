#pragma once

#include "thinhomog/expr.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace thinhomog {

// A structural or numeric check failed (hypothesis violation, gate not met).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Boundary profile G(x, y): positive, L-periodic in the fast variable y,
// piecewise C^1 in the slow variable x with breakpoints on [0, 1].
struct Profile {
    enum class Kind { Constant, Expression, Piecewise };

    Kind kind = Kind::Constant;
    std::vector<double> breakpoints; // 0 = b_0 < ... < b_m = 1; {0, 1} unless piecewise
    std::vector<Expr> pieces;        // one Expr per x-interval
    double L = 1.0;
    double G0 = 0.0; // declared lower bound
    double G1 = 0.0; // declared upper bound
    std::optional<double> M;         // declared bound on |dG/dy|, if any

    static Profile constant(double c, double L = 1.0);
    static Profile expression(const std::string& src, double L, double G0, double G1,
                              std::optional<double> M = std::nullopt);
    static Profile piecewise(std::vector<double> breakpoints, std::vector<std::string> exprs,
                             double L, double G0, double G1,
                             std::optional<double> M = std::nullopt);

    double value(double x, double y) const;
    // Boundary height of the thin domain at slow position x: G(x, x/eps).
    double value_eps(double x, double eps) const { return value(x, x / eps); }

    // Index of the x-interval containing x ([b_i, b_{i+1}), last interval closed).
    std::size_t interval_of(double x) const;

    bool x_independent() const;

    // Stable serialization used for hashing and cache keys.
    std::string canonical() const;
    std::uint64_t hash() const;
};

struct BreakpointJump {
    double x;
    double max_gap; // max over sampled y of |G(x-, y) - G(x+, y)|
};

struct HypothesisReport {
    double min_value = 0.0;
    double max_value = 0.0;
    double periodicity_defect = 0.0; // max |G(x, y+L) - G(x, y)|
    double max_dy = 0.0;             // max sampled |dG/dy| (central differences)
    std::vector<BreakpointJump> jumps;
    bool pass = false;
    std::vector<std::string> failures;
};

struct SampleGrid {
    int nx = 64; // x samples per subinterval (>= 16)
    int ny = 64; // y samples per period (>= 16)
};

// Samples the profile and checks the structural hypothesis: bounds G0/G1 hold up to
// tol, values are strictly positive, G is L-periodic in y (relative defect <= 1e-12).
// Derivatives come from central differences with step 1e-6; nothing symbolic.
HypothesisReport validate_hypothesis(const Profile& profile, const SampleGrid& grid = {},
                                     double tol = 1e-9);

// Piecewise-constant-in-x surrogate: on each partition interval the height is the
// left-endpoint slice plus delta/2, so 0 <= approx - G <= delta holds everywhere.
struct PiecewiseProfile {
    std::vector<double> partition; // 0 = z_0 < ... < z_m = 1
    std::vector<Expr> pieces;      // y-only expression per interval
    double L = 1.0;
    double G0 = 0.0;
    double G1 = 0.0;
    double delta = 0.0;

    double value(double x, double y) const;
    std::size_t interval_of(double x) const;
    Profile as_profile() const;
};

// Bisects the x-partition (seeded with the profile's breakpoints) until the sampled
// x-oscillation on every interval is below delta/2. Throws if max_intervals is hit.
PiecewiseProfile build_piecewise_approx(const Profile& profile, double delta,
                                        int max_intervals = 4096);

// sup|a-b| + sup|da/dy - db/dy| over a y-sample of the period. Both profiles must be
// x-independent and share L.
double c1_distance(const Profile& a, const Profile& b, int ny_samples = 2048);

std::uint64_t fnv1a64(const std::string& bytes);

} // namespace thinhomog
