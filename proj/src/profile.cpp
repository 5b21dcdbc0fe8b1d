#include "thinhomog/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace thinhomog {

namespace {

constexpr double kDerivStep = 1e-6;

void check_bounds_decl(double L, double G0, double G1) {
    if (!(L > 0.0))
        throw ValidationError("profile: period L must be positive");
    if (!(G0 > 0.0))
        throw ValidationError("profile: lower bound G0 must be positive");
    if (!(G1 >= G0))
        throw ValidationError("profile: upper bound G1 must be >= G0");
}

void check_breakpoints(const std::vector<double>& b) {
    if (b.size() < 2 || b.front() != 0.0 || b.back() != 1.0)
        throw ValidationError("profile: breakpoints must start at 0 and end at 1");
    for (std::size_t i = 1; i < b.size(); ++i)
        if (!(b[i] > b[i - 1]))
            throw ValidationError("profile: breakpoints must be strictly increasing");
}

std::size_t interval_index(const std::vector<double>& b, double x) {
    // [b_i, b_{i+1}) convention; the last interval is closed on the right.
    auto it = std::upper_bound(b.begin(), b.end(), x);
    if (it == b.begin())
        return 0;
    std::size_t i = static_cast<std::size_t>(it - b.begin()) - 1;
    return std::min(i, b.size() - 2);
}

} // namespace

Profile Profile::constant(double c, double L) {
    if (!(c > 0.0))
        throw ValidationError("profile: constant height must be positive");
    Profile p;
    p.kind = Kind::Constant;
    p.breakpoints = {0.0, 1.0};
    p.pieces = {Expr::constant(c)};
    p.L = L;
    p.G0 = c;
    p.G1 = c;
    check_bounds_decl(p.L, p.G0, p.G1);
    return p;
}

Profile Profile::expression(const std::string& src, double L, double G0, double G1,
                            std::optional<double> M) {
    check_bounds_decl(L, G0, G1);
    Profile p;
    p.kind = Kind::Expression;
    p.breakpoints = {0.0, 1.0};
    p.pieces = {Expr::parse(src)};
    p.L = L;
    p.G0 = G0;
    p.G1 = G1;
    p.M = M;
    return p;
}

Profile Profile::piecewise(std::vector<double> breakpoints, std::vector<std::string> exprs,
                           double L, double G0, double G1, std::optional<double> M) {
    check_bounds_decl(L, G0, G1);
    check_breakpoints(breakpoints);
    if (exprs.size() + 1 != breakpoints.size())
        throw ValidationError("profile: need one expression per breakpoint interval");
    Profile p;
    p.kind = Kind::Piecewise;
    p.breakpoints = std::move(breakpoints);
    for (const auto& e : exprs)
        p.pieces.push_back(Expr::parse(e));
    p.L = L;
    p.G0 = G0;
    p.G1 = G1;
    p.M = M;
    return p;
}

std::size_t Profile::interval_of(double x) const { return interval_index(breakpoints, x); }

double Profile::value(double x, double y) const {
    return pieces[interval_of(x)].eval(x, y);
}

bool Profile::x_independent() const {
    if (kind == Kind::Constant)
        return true;
    for (const auto& e : pieces)
        if (e.depends_on_x())
            return false;
    return pieces.size() == 1;
}

std::string Profile::canonical() const {
    std::string s = "profile|kind=";
    s += (kind == Kind::Constant ? "constant" : kind == Kind::Expression ? "expr" : "piecewise");
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        s += buf;
    };
    s += "|L=";
    put(L);
    s += "|G0=";
    put(G0);
    s += "|G1=";
    put(G1);
    s += "|M=";
    if (M)
        put(*M);
    else
        s += "none";
    s += "|b=";
    for (double b : breakpoints) {
        put(b);
        s += ',';
    }
    s += "|e=";
    for (const auto& e : pieces) {
        s += e.str();
        s += ';';
    }
    return s;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t Profile::hash() const { return fnv1a64(canonical()); }

HypothesisReport validate_hypothesis(const Profile& profile, const SampleGrid& grid, double tol) {
    if (grid.nx < 16 || grid.ny < 16)
        throw ValidationError("validate_hypothesis: need at least 16 samples per direction");

    HypothesisReport rep;
    rep.min_value = std::numeric_limits<double>::infinity();
    rep.max_value = -std::numeric_limits<double>::infinity();

    const double L = profile.L;
    bool nonpositive = false;
    for (std::size_t k = 0; k + 1 < profile.breakpoints.size(); ++k) {
        double a = profile.breakpoints[k], b = profile.breakpoints[k + 1];
        for (int i = 0; i < grid.nx; ++i) {
            double x = a + (i + 0.5) * (b - a) / grid.nx;
            for (int j = 0; j <= grid.ny; ++j) {
                double y = j * L / grid.ny;
                double g = profile.value(x, y);
                rep.min_value = std::min(rep.min_value, g);
                rep.max_value = std::max(rep.max_value, g);
                if (!(g > 0.0))
                    nonpositive = true;
                rep.periodicity_defect =
                    std::max(rep.periodicity_defect, std::fabs(profile.value(x, y + L) - g));
                double dy = (profile.value(x, y + kDerivStep) - profile.value(x, y - kDerivStep)) /
                            (2.0 * kDerivStep);
                rep.max_dy = std::max(rep.max_dy, std::fabs(dy));
            }
        }
    }

    // One-sided limits across interior breakpoints, estimated just off the joint.
    for (std::size_t k = 1; k + 1 < profile.breakpoints.size(); ++k) {
        double xb = profile.breakpoints[k];
        double h = 1e-9;
        BreakpointJump jump{xb, 0.0};
        for (int j = 0; j <= grid.ny; ++j) {
            double y = j * L / grid.ny;
            double left = profile.value(xb - h, y);
            double right = profile.value(xb + h, y);
            jump.max_gap = std::max(jump.max_gap, std::fabs(left - right));
        }
        rep.jumps.push_back(jump);
    }

    char msg[160];
    if (nonpositive) {
        std::snprintf(msg, sizeof(msg), "sampled value <= 0 (min %.6g)", rep.min_value);
        rep.failures.push_back(msg);
    }
    if (rep.min_value < profile.G0 - tol) {
        std::snprintf(msg, sizeof(msg), "sampled min %.6g below declared G0 %.6g", rep.min_value,
                      profile.G0);
        rep.failures.push_back(msg);
    }
    if (rep.max_value > profile.G1 + tol) {
        std::snprintf(msg, sizeof(msg), "sampled max %.6g above declared G1 %.6g", rep.max_value,
                      profile.G1);
        rep.failures.push_back(msg);
    }
    double scale = std::max(1.0, std::fabs(rep.max_value));
    if (rep.periodicity_defect > 1e-12 * scale) {
        std::snprintf(msg, sizeof(msg), "periodicity defect %.6g exceeds 1e-12 relative",
                      rep.periodicity_defect);
        rep.failures.push_back(msg);
    }
    if (profile.M && rep.max_dy > *profile.M + tol) {
        std::snprintf(msg, sizeof(msg), "sampled |dG/dy| %.6g above declared M %.6g", rep.max_dy,
                      *profile.M);
        rep.failures.push_back(msg);
    }
    rep.pass = rep.failures.empty();
    return rep;
}

std::size_t PiecewiseProfile::interval_of(double x) const { return interval_index(partition, x); }

double PiecewiseProfile::value(double x, double y) const {
    return pieces[interval_of(x)].eval(x, y);
}

Profile PiecewiseProfile::as_profile() const {
    Profile p;
    p.kind = Profile::Kind::Piecewise;
    p.breakpoints = partition;
    p.pieces = pieces;
    p.L = L;
    p.G0 = G0;
    p.G1 = G1 + delta; // the lift delta/2 plus oscillation delta/2 can exceed G1 by delta
    return p;
}

namespace {

// Max over a dense deterministic sample of |G(x, y) - G(z_left, y)| on one interval.
// The right endpoint is probed one-sided so base breakpoints don't leak the next piece.
double interval_oscillation(const Profile& profile, double a, double b) {
    const int nx = 33, ny = 65;
    double osc = 0.0;
    for (int i = 1; i <= nx; ++i) {
        double x = a + i * (b - a) / nx;
        if (i == nx)
            x = b - 1e-12 * (1.0 + (b - a));
        for (int j = 0; j < ny; ++j) {
            double y = j * profile.L / ny;
            osc = std::max(osc, std::fabs(profile.value(x, y) - profile.value(a, y)));
        }
    }
    return osc;
}

} // namespace

PiecewiseProfile build_piecewise_approx(const Profile& profile, double delta, int max_intervals) {
    if (!(delta > 0.0))
        throw ValidationError("build_piecewise_approx: delta must be positive");

    std::vector<double> part = profile.breakpoints;
    // Threshold carries a small safety margin so the sampled criterion implies the
    // continuum bound 0 <= approx - G <= delta on the tested profile classes.
    const double threshold = 0.5 * delta * (1.0 - 1.0 / 64.0);

    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<double> next;
        next.push_back(part.front());
        for (std::size_t i = 0; i + 1 < part.size(); ++i) {
            double a = part[i], b = part[i + 1];
            if (interval_oscillation(profile, a, b) > threshold) {
                next.push_back(0.5 * (a + b));
                changed = true;
            }
            next.push_back(b);
        }
        part = std::move(next);
        if (static_cast<int>(part.size()) - 1 > max_intervals)
            throw ValidationError("build_piecewise_approx: exceeded max_intervals; "
                                     "delta too small for this profile");
    }

    PiecewiseProfile out;
    out.partition = part;
    out.L = profile.L;
    out.G0 = profile.G0;
    out.G1 = profile.G1;
    out.delta = delta;
    for (std::size_t i = 0; i + 1 < part.size(); ++i) {
        const Expr& piece = profile.pieces[profile.interval_of(part[i])];
        out.pieces.push_back(piece.substitute_x(part[i]).add_constant(0.5 * delta));
    }
    return out;
}

double c1_distance(const Profile& a, const Profile& b, int ny_samples) {
    if (!a.x_independent() || !b.x_independent())
        throw ValidationError("c1_distance: both profiles must be x-independent");
    if (a.L != b.L)
        throw ValidationError("c1_distance: profiles must share the period L");
    if (ny_samples < 16)
        throw ValidationError("c1_distance: need at least 16 samples");

    double sup0 = 0.0, sup1 = 0.0;
    for (int j = 0; j < ny_samples; ++j) {
        double y = j * a.L / ny_samples;
        double va = a.value(0.0, y), vb = b.value(0.0, y);
        sup0 = std::max(sup0, std::fabs(va - vb));
        double da = (a.value(0.0, y + kDerivStep) - a.value(0.0, y - kDerivStep)) / (2 * kDerivStep);
        double db = (b.value(0.0, y + kDerivStep) - b.value(0.0, y - kDerivStep)) / (2 * kDerivStep);
        sup1 = std::max(sup1, std::fabs(da - db));
    }
    return sup0 + sup1;
}

} // namespace thinhomog
