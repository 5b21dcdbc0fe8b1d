#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "thinhomog/plap.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace thinhomog;

namespace {

MeshPtr unit_square(int n = 1) {
    return build_graph_mesh([](double) { return 1.0; }, 0.0, 1.0, n, n, false);
}

std::vector<double> random_vector(int n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(n);
    for (auto& vi : v) vi = u(rng);
    return v;
}

} // namespace

TEST_CASE("a_p basics") {
    CHECK(a_p(2.0, 2.0) == doctest::Approx(2.0));
    CHECK(a_p(-2.0, 2.0) == doctest::Approx(-2.0));
    CHECK(a_p(2.0, 3.0) == doctest::Approx(4.0));
    CHECK(a_p(-2.0, 3.0) == doctest::Approx(-4.0));
    CHECK(a_p(4.0, 1.5) == doctest::Approx(2.0));
    CHECK(a_p(0.0, 1.5) == 0.0);
    CHECK(a_p(0.0, 4.0) == 0.0);

    Vec2 v = a_p(Vec2{3.0, 4.0}, 3.0); // |v|=5, a_p = 5 * (3/5, 4/5) * 5 = (15, 20)
    CHECK(v.x == doctest::Approx(15.0));
    CHECK(v.y == doctest::Approx(20.0));
    Vec2 z = a_p(Vec2{0.0, 0.0}, 1.2);
    CHECK(z.x == 0.0);
    CHECK(z.y == 0.0);
    // Denormal-safe for p < 2.
    Vec2 tiny = a_p(Vec2{1e-300, 0.0}, 1.5);
    CHECK(std::isfinite(tiny.x));
}

TEST_CASE("monotonicity gap is nonnegative on random pairs") {
    std::mt19937_64 rng(314);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (double p : {1.2, 1.5, 2.0, 3.0, 4.0}) {
        for (int k = 0; k < 2000; ++k) {
            Vec2 x{u(rng), u(rng)}, y{u(rng), u(rng)};
            double gap = monotonicity_gap(x, y, p);
            double scale = std::pow(norm(x) + norm(y), p);
            CHECK(gap >= -1e-12 * std::max(scale, 1.0));
        }
    }
}

TEST_CASE("inequality suites pass for the standard exponent sweep") {
    for (double p : {1.2, 1.5, 2.0, 3.0, 4.0}) {
        InequalitySuiteResult res = run_inequality_suite(p, 10000, 20240801);
        CHECK(res.pass);
        CHECK(res.sign_violations == 0);
        CHECK(res.tangent_violations == 0);
        CHECK(res.min_coercivity > 0.0);
        CHECK(res.max_continuity > 0.0);
        CHECK(res.pairs == 10000);
    }
    CHECK_THROWS(run_inequality_suite(1.0, 100, 1));
}

TEST_CASE("energy assembly on known fields") {
    MeshPtr m = unit_square(4);
    int n = m->dof_count;

    SUBCASE("constant offset field") {
        EnergySpec spec;
        spec.mesh = m;
        spec.gradient_term = true;
        spec.offset = {1.0, 0.0};
        for (double p : {1.5, 2.0, 3.0}) {
            spec.p = p;
            std::vector<double> zero(n, 0.0);
            CHECK(assemble_energy(spec, zero) == doctest::Approx(1.0 / p).epsilon(1e-14));
        }
    }
    SUBCASE("linear field cancels the offset") {
        EnergySpec spec;
        spec.mesh = m;
        spec.p = 2.0;
        spec.offset = {1.0, 0.0};
        std::vector<double> u(n);
        for (int d = 0; d < n; ++d) u[d] = -m->nodes[m->dof_node()[d]].x;
        CHECK(assemble_energy(spec, u) == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("mass term is exact for quadratics") {
        EnergySpec spec;
        spec.mesh = m;
        spec.p = 2.0;
        spec.gradient_term = false;
        spec.mass_term = true;
        std::vector<double> u(n);
        for (int d = 0; d < n; ++d) u[d] = m->nodes[m->dof_node()[d]].x;
        // (1/2) int x^2 over the unit square
        CHECK(assemble_energy(spec, u) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    }
    SUBCASE("load term, function and field forms agree") {
        EnergySpec spec;
        spec.mesh = m;
        spec.p = 2.0;
        spec.gradient_term = false;
        spec.mass_term = true;
        spec.load = [](double x, double) { return 1.0 + x; };
        std::vector<double> u(n);
        for (int d = 0; d < n; ++d) u[d] = m->nodes[m->dof_node()[d]].x;
        double e_fn = assemble_energy(spec, u);
        // (1/2) int x^2 - int (1+x) x = 1/6 - (1/2 + 1/3)
        CHECK(e_fn == doctest::Approx(1.0 / 6.0 - 5.0 / 6.0).epsilon(1e-13));

        EnergySpec spec2 = spec;
        spec2.load = nullptr;
        spec2.load_field = sample_field(m, [](double x, double) { return 1.0 + x; });
        CHECK(assemble_energy(spec2, u) == doctest::Approx(e_fn).epsilon(1e-13));
    }
}

TEST_CASE("assembled gradient matches finite differences of the energy") {
    MeshPtr m = build_graph_mesh([](double x) { return 1.0 + 0.2 * x; }, 0.0, 1.0, 3, 3, false);
    int n = m->dof_count;

    auto check_fd = [&](const EnergySpec& spec, double gamma, double tol) {
        std::vector<double> u = random_vector(n, 2024, 0.5);
        std::vector<double> g = assemble_gradient(spec, u, gamma);
        double h = 1e-6;
        for (int d = 0; d < n; ++d) {
            std::vector<double> up = u, um = u;
            up[d] += h;
            um[d] -= h;
            double fd =
                (assemble_energy(spec, up, gamma) - assemble_energy(spec, um, gamma)) / (2 * h);
            CHECK(g[d] == doctest::Approx(fd).epsilon(tol));
        }
    };

    EnergySpec spec;
    spec.mesh = m;
    spec.gradient_term = true;
    spec.mass_term = true;
    spec.offset = {1.0, 0.0};
    spec.load = [](double x, double y) { return std::cos(x + y); };

    for (double p : {1.5, 2.0, 3.0}) {
        spec.p = p;
        check_fd(spec, 0.0, 1e-5);
        check_fd(spec, 1e-3, 1e-5);
    }
}

TEST_CASE("assembled Hessian matches finite differences of the gradient") {
    MeshPtr m = build_graph_mesh([](double x) { return 1.0 + 0.2 * x; }, 0.0, 1.0, 3, 3, false);
    int n = m->dof_count;
    double gamma = 1e-2;

    EnergySpec spec;
    spec.mesh = m;
    spec.gradient_term = true;
    spec.mass_term = true;
    spec.offset = {1.0, 0.0};

    for (double p : {1.5, 2.0, 3.0}) {
        spec.p = p;
        std::vector<double> u = random_vector(n, 99, 0.5);
        std::vector<double> dir = random_vector(n, 100, 1.0);
        SparseMatrix H = assemble_hessian(spec, u, gamma);
        std::vector<double> Hd;
        H.matvec(dir, Hd);

        double h = 1e-6;
        std::vector<double> up = u, um = u;
        for (int d = 0; d < n; ++d) {
            up[d] += h * dir[d];
            um[d] -= h * dir[d];
        }
        std::vector<double> gp = assemble_gradient(spec, up, gamma);
        std::vector<double> gm = assemble_gradient(spec, um, gamma);
        double num = 0.0, den = 0.0;
        for (int d = 0; d < n; ++d) {
            double fd = (gp[d] - gm[d]) / (2 * h);
            num += (Hd[d] - fd) * (Hd[d] - fd);
            den += fd * fd;
        }
        CHECK(std::sqrt(num) <= 1e-5 * std::sqrt(den));
    }
}

TEST_CASE("spec validation rejects malformed problems") {
    MeshPtr m = unit_square(2);
    EnergySpec spec;
    CHECK_THROWS(spec.validate()); // no mesh
    spec.mesh = m;
    spec.p = 1.0;
    CHECK_THROWS(spec.validate()); // p too small
    spec.p = 2.0;
    spec.gradient_term = false;
    spec.mass_term = false;
    CHECK_THROWS(spec.validate()); // no terms
    spec.gradient_term = true;
    spec.load = [](double, double) { return 1.0; };
    spec.load_field = make_field(m, 1.0);
    CHECK_THROWS(spec.validate()); // both load forms
    spec.load = nullptr;
    spec.load_field.reset();
    spec.constraint = EnergySpec::Constraint::PeriodicZeroMean;
    CHECK_THROWS(spec.validate()); // mesh is not periodic

    MeshPtr per = build_graph_mesh([](double) { return 1.0; }, 0.0, 1.0, 4, 2, true);
    spec.mesh = per;
    CHECK_NOTHROW(spec.validate());
}

TEST_CASE("minimize recovers a P1 load under the mass-only energy") {
    // At p = 2 the optimality system is M u = M f, so the minimizer is f itself.
    MeshPtr m = unit_square(5);
    EnergySpec spec;
    spec.mesh = m;
    spec.p = 2.0;
    spec.gradient_term = false;
    spec.mass_term = true;
    spec.load_field = sample_field(m, [](double x, double y) { return 0.3 - x + 2 * y * y; });

    auto [u, report] = minimize(spec, SolveConfig{}, make_field(m, 0.0));
    CHECK(report.converged);
    for (int d = 0; d < m->dof_count; ++d)
        CHECK(u.values[d] == doctest::Approx(spec.load_field->values[d]).epsilon(1e-9));
}

TEST_CASE("minimize drives the offset field to zero under a zero-mean gauge") {
    // With free boundary the offset is a gradient, so the optimum has zero energy
    // and the corrector is -(x - mean x).
    MeshPtr m = unit_square(6);
    for (double p : {2.0, 3.0}) {
        EnergySpec spec;
        spec.mesh = m;
        spec.p = p;
        spec.offset = {1.0, 0.0};
        spec.constraint = EnergySpec::Constraint::ZeroMean;

        auto [psi, report] = minimize(spec, SolveConfig{}, make_field(m, 0.0, p));
        CHECK(report.converged);
        CHECK(report.energy <= 1e-10);
        CHECK(std::fabs(field_mean(psi)) <= 1e-10);
        for (int d = 0; d < m->dof_count; ++d) {
            double want = -(m->nodes[m->dof_node()[d]].x - 0.5);
            CHECK(psi.values[d] == doctest::Approx(want).epsilon(5e-4));
        }
    }
}

TEST_CASE("solve report bookkeeping is consistent") {
    MeshPtr m = build_graph_mesh([](double) { return 1.0; }, 0.0, 1.0, 8, 8, true);
    EnergySpec spec;
    spec.mesh = m;
    spec.p = 3.0;
    spec.gradient_term = true;
    spec.mass_term = true;
    spec.load = [](double x, double y) { return std::sin(2 * M_PI * x) + y; };

    auto [u, report] = minimize(spec, SolveConfig{}, make_field(m, 0.0, 3.0));
    CHECK(report.converged);
    CHECK(report.grad_norm_rel <= 1e-10);
    CHECK(report.wall_seconds >= 0.0);
    int total = 0;
    for (int s : report.stage_iterations) total += s;
    CHECK(total == report.newton_iterations);
    REQUIRE(!report.energy_history.empty());
    // Energies of accepted iterates never increase beyond roundoff.
    for (std::size_t i = 1; i < report.energy_history.size(); ++i)
        CHECK(report.energy_history[i] <=
              report.energy_history[i - 1] + 1e-12 * (1 + std::fabs(report.energy_history[i - 1])));
    CHECK(report.energy == doctest::Approx(report.energy_history.back()));

    // Initial field on a different mesh is rejected.
    CHECK_THROWS(minimize(spec, SolveConfig{}, make_field(unit_square(2), 0.0)));
}

TEST_CASE("norms on known fields") {
    MeshPtr m = unit_square(8);

    NodalField one = make_field(m, 1.0, 2.0);
    NormReport n1 = norms(one, 2.0);
    CHECK(n1.lp == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(n1.grad_lp == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(n1.w1p == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(n1.lp_triple == 0.0); // eps unset

    NodalField linear = sample_field(m, [](double x, double) { return x; });
    NormReport n2 = norms(linear, 2.0);
    CHECK(n2.lp == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-13));
    CHECK(n2.grad_lp == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(n2.w1p == doctest::Approx(std::sqrt(1.0 / 3.0 + 1.0)).epsilon(1e-13));

    double eps = 0.25;
    NormReport n3 = norms(linear, 2.0, eps);
    CHECK(n3.lp_triple == doctest::Approx(std::pow(eps, -0.5) * n3.lp).epsilon(1e-13));
    CHECK(n3.w1p_triple == doctest::Approx(std::pow(eps, -0.5) * n3.w1p).epsilon(1e-13));

    CHECK(lq_norm_function(*m, [](double, double) { return 1.0; }, 3.0) ==
          doctest::Approx(1.0).epsilon(1e-13));
    CHECK(lq_norm_function(*m, [](double x, double) { return x; }, 2.0) ==
          doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-13));
}

TEST_CASE("lumped weights and means") {
    MeshPtr m = build_graph_mesh([](double x) { return 1.0 + 0.5 * x; }, 0.0, 1.0, 6, 5, false);
    std::vector<double> w = lumped_weights(*m);
    double sum = 0.0;
    for (double wi : w) sum += wi;
    CHECK(sum == doctest::Approx(m->total_area()).epsilon(1e-13));

    CHECK(field_mean(make_field(m, 3.25)) == doctest::Approx(3.25).epsilon(1e-13));
    // P1 exactness: mean of x over the unit square.
    MeshPtr sq = unit_square(4);
    NodalField linear = sample_field(sq, [](double x, double) { return x; });
    CHECK(field_mean(linear) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("weighted seminorms behind the stretch operator") {
    MeshPtr m = unit_square(6);
    NodalField u = sample_field(m, [](double, double y) { return y; });
    double p = 2.0;
    // eta = 0 reduces to the plain W^{1,p} power.
    CHECK(w1p_eta_pth_power(u, p, 0.0) == doctest::Approx(w1p_pth_power(u, p)).epsilon(1e-13));
    CHECK(w1p_pth_power(u, p) == doctest::Approx(1.0 / 3.0 + 1.0).epsilon(1e-13));
    // eta = 1: (1/2)[ int y^2 + int |(0, 2)|^2 ] = (1/2)(1/3 + 4).
    CHECK(w1p_eta_pth_power(u, p, 1.0) == doctest::Approx(0.5 * (1.0 / 3.0 + 4.0)).epsilon(1e-13));
}
