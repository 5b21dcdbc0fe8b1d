#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "thinhomog/mesh.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

using namespace thinhomog;

namespace {

double gl4_integral(const std::function<double(double)>& f, double a, double b, int panels) {
    // 4-point Gauss-Legendre per panel, the oracle for areas under smooth graphs.
    static const double xs[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                 0.8611363115940526};
    static const double ws[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                 0.3478548451374538};
    double total = 0.0;
    for (int k = 0; k < panels; ++k) {
        double lo = a + (b - a) * k / panels, hi = a + (b - a) * (k + 1) / panels;
        double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        for (int i = 0; i < 4; ++i) total += half * ws[i] * f(mid + half * xs[i]);
    }
    return total;
}

} // namespace

TEST_CASE("unit square splits into two triangles") {
    MeshPtr m = build_graph_mesh([](double) { return 1.0; }, 0.0, 1.0, 1, 1, false);
    CHECK(m->node_count() == 4);
    CHECK(m->triangle_count() == 2);
    CHECK(m->dof_count == 4);
    CHECK(m->total_area() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m->area[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m->area[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m->grid_nx == 1);
    CHECK(m->grid_ny == 1);
    CHECK(m->x_lo == 0.0);
    CHECK(m->x_hi == 1.0);
    CHECK(audit_mesh(*m).pass());

    // Hat-function gradients reproduce the differential of a linear function.
    for (int t = 0; t < 2; ++t) {
        Vec2 g{0, 0};
        for (int k = 0; k < 3; ++k) {
            Vec2 node = m->nodes[m->tris[t][k]];
            double v = 2.0 * node.x - 3.0 * node.y;
            g = g + v * m->grad[t][k];
        }
        CHECK(g.x == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(g.y == doctest::Approx(-3.0).epsilon(1e-14));
    }
}

TEST_CASE("graph mesh area matches the trapezoid polygon exactly and the integral to O(h^2)") {
    // Non-periodic boundary, otherwise the trapezoid sum is exact and hides the rate.
    auto h = [](double x) { return 1.0 + 0.3 * std::sin(M_PI * x) + 0.2 * x * x; };
    double exact = gl4_integral(h, 0.0, 1.0, 64);

    double prev_err = 0.0;
    for (int nx : {16, 32, 64}) {
        MeshPtr m = build_graph_mesh(h, 0.0, 1.0, nx, 4, false);
        // The mesh is exactly the polygon under the piecewise-linear boundary.
        double poly = 0.0;
        for (int i = 0; i < nx; ++i) {
            double x0 = static_cast<double>(i) / nx, x1 = static_cast<double>(i + 1) / nx;
            poly += 0.5 * (h(x0) + h(x1)) / nx;
        }
        CHECK(m->total_area() == doctest::Approx(poly).epsilon(1e-13));
        double err = std::fabs(m->total_area() - exact);
        if (prev_err > 0.0)
            CHECK(err < 0.3 * prev_err); // second order: each doubling cuts the error ~4x
        prev_err = err;
        CHECK(audit_mesh(*m).pass());
    }
}

TEST_CASE("periodic identification merges the end columns") {
    int nx = 8, ny = 3;
    MeshPtr m = build_graph_mesh([](double x) { return 1.0 + 0.1 * std::cos(2 * M_PI * x); }, 0.0,
                                 1.0, nx, ny, true);
    CHECK(m->node_count() == (nx + 1) * (ny + 1));
    CHECK(m->dof_count == nx * (ny + 1));
    CHECK(m->periodic_pairs.size() == static_cast<std::size_t>(ny + 1));
    for (auto [l, r] : m->periodic_pairs) {
        CHECK(m->node_dof[l] == m->node_dof[r]);
        CHECK(m->nodes[l].y == doctest::Approx(m->nodes[r].y).epsilon(1e-13));
        CHECK(m->nodes[r].x - m->nodes[l].x == doctest::Approx(1.0).epsilon(1e-13));
    }
    MeshAudit audit = audit_mesh(*m);
    CHECK(audit.pass());
    CHECK(audit.periodic_consistent);

    // dof_node points at a node that actually carries the dof.
    for (int d = 0; d < m->dof_count; ++d) CHECK(m->node_dof[m->dof_node()[d]] == d);
}

TEST_CASE("graph mesh input validation") {
    auto one = [](double) { return 1.0; };
    CHECK_THROWS(build_graph_mesh(one, 0.0, 1.0, 0, 4, false));
    CHECK_THROWS(build_graph_mesh(one, 1.0, 0.0, 4, 4, false));
    CHECK_THROWS(build_graph_mesh([](double) { return -1.0; }, 0.0, 1.0, 4, 4, false));
    // Periodic needs matching end heights.
    CHECK_THROWS(build_graph_mesh([](double x) { return 1.0 + x; }, 0.0, 1.0, 4, 4, true));
    CHECK_NOTHROW(build_graph_mesh([](double x) { return 1.0 + x; }, 0.0, 1.0, 4, 4, false));
}

TEST_CASE("strip mesh between two graphs") {
    auto lower = [](double x) { return 0.2 * x; };
    auto upper = [](double x) { return 1.0 + 0.2 * x; };
    MeshPtr m = build_strip_mesh(lower, upper, 0.0, 1.0, 8, 4);
    CHECK(m->total_area() == doctest::Approx(1.0).epsilon(1e-12)); // constant gap 1
    CHECK(audit_mesh(*m).pass());

    // Zero-gap strip collapses to nothing.
    MeshPtr empty = build_strip_mesh(lower, lower, 0.0, 1.0, 8, 4);
    CHECK(empty->triangle_count() == 0);
    CHECK(empty->total_area() == 0.0);

    // Partial collapse: gap vanishes on the left half.
    auto wedge_upper = [](double x) { return x < 0.5 ? 0.0 : x - 0.5; };
    MeshPtr wedge = build_strip_mesh([](double) { return 0.0; }, wedge_upper, 0.0, 1.0, 16, 3);
    CHECK(wedge->triangle_count() > 0);
    CHECK(wedge->total_area() == doctest::Approx(0.125).epsilon(1e-10));
    CHECK(audit_mesh(*wedge).pass());

    CHECK_THROWS(build_strip_mesh(upper, lower, 0.0, 1.0, 8, 4)); // upper < lower
}

TEST_CASE("point location") {
    auto h = [](double x) { return 1.0 + 0.3 * std::sin(2 * M_PI * x); };
    MeshPtr m = build_graph_mesh(h, 0.0, 1.0, 24, 6, false);

    SUBCASE("random interior points reconstruct their coordinates") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> ux(0.0, 1.0), uy(0.0, 1.0);
        for (int k = 0; k < 500; ++k) {
            double x = ux(rng);
            double y = uy(rng) * 0.69; // below min height 0.7
            Mesh::Location loc = m->locate({x, y});
            REQUIRE(loc.tri >= 0);
            double bsum = loc.bary[0] + loc.bary[1] + loc.bary[2];
            CHECK(bsum == doctest::Approx(1.0).epsilon(1e-12));
            Vec2 rec{0, 0};
            for (int i = 0; i < 3; ++i) rec = rec + loc.bary[i] * m->nodes[m->tris[loc.tri][i]];
            CHECK(rec.x == doctest::Approx(x).epsilon(1e-10));
            CHECK(rec.y == doctest::Approx(y).epsilon(1e-10));
        }
    }
    SUBCASE("outside points are rejected") {
        CHECK(m->locate({0.5, 5.0}).tri == -1);
        CHECK(m->locate({-0.2, 0.5}).tri == -1);
        CHECK(m->locate({0.5, -0.1}).tri == -1);
    }
    SUBCASE("snapping accepts near-boundary points") {
        double x = 0.37, top = 0.0;
        {
            // Polygonal boundary height at x (piecewise linear between columns).
            int i = static_cast<int>(x * 24);
            double x0 = i / 24.0, x1 = (i + 1) / 24.0;
            double t = (x - x0) / (x1 - x0);
            top = (1 - t) * h(x0) + t * h(x1);
        }
        CHECK(m->locate({x, top + 1e-10}).tri == -1);
        CHECK(m->locate_snapped({x, top + 1e-10}, 1e-9).tri >= 0);
        CHECK(m->locate_snapped({x, top + 1.0}, 1e-9).tri == -1);
    }
    SUBCASE("shared-edge points resolve deterministically") {
        Mesh::Location a = m->locate({0.5, 0.35});
        Mesh::Location b = m->locate({0.5, 0.35});
        CHECK(a.tri == b.tri);
    }
}

TEST_CASE("fields, evaluation, interpolation") {
    auto h = [](double x) { return 1.0 + 0.25 * x; };
    MeshPtr coarse = build_graph_mesh(h, 0.0, 1.0, 8, 4, false);
    MeshPtr fine = build_graph_mesh(h, 0.0, 1.0, 32, 16, false);

    SUBCASE("make_field fills and tags") {
        NodalField f = make_field(coarse, 2.5, 3.0, "test");
        CHECK(f.values.size() == static_cast<std::size_t>(coarse->dof_count));
        CHECK(f.p == 3.0);
        CHECK(f.role == "test");
        CHECK(f.at_node(5) == 2.5);
    }
    SUBCASE("affine functions interpolate exactly") {
        auto affine = [](double x, double y) { return 1.0 + 2.0 * x - 0.5 * y; };
        NodalField f = sample_field(coarse, affine);
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int k = 0; k < 200; ++k) {
            double x = u(rng), y = u(rng) * 0.99; // min height 1.0
            CHECK(evaluate(f, {x, y}) == doctest::Approx(affine(x, y)).epsilon(1e-12));
        }
        NodalField onto = interpolate(f, fine);
        for (int n = 0; n < fine->node_count(); ++n)
            CHECK(onto.at_node(n) ==
                  doctest::Approx(affine(fine->nodes[n].x, fine->nodes[n].y)).epsilon(1e-12));
    }
    SUBCASE("quadratics interpolate to O(h^2)") {
        auto quad = [](double x, double y) { return x * x + y * y; };
        double errs[2];
        int idx = 0;
        for (MeshPtr m : {build_graph_mesh(h, 0, 1, 16, 8, false),
                          build_graph_mesh(h, 0, 1, 32, 16, false)}) {
            NodalField f = sample_field(m, quad);
            double worst = 0.0;
            for (double x : {0.11, 0.43, 0.77})
                for (double y : {0.09, 0.51, 0.93})
                    worst = std::max(worst, std::fabs(evaluate(f, {x, y}) - quad(x, y)));
            errs[idx++] = worst;
        }
        CHECK(errs[1] < 0.35 * errs[0]);
    }
    SUBCASE("interpolation rejects targets outside the source") {
        MeshPtr tall = build_graph_mesh([](double) { return 3.0; }, 0.0, 1.0, 4, 4, false);
        NodalField f = sample_field(coarse, [](double x, double) { return x; });
        CHECK_THROWS(interpolate(f, tall));
        CHECK_THROWS(evaluate(f, {0.5, 2.9}));
    }
}

TEST_CASE("audit flags a non-conforming mesh") {
    // Three CCW triangles sharing one edge cannot tile a planar domain.
    Mesh m;
    m.nodes = {{0, 0}, {1, 0}, {0, 1}, {0.5, 1.5}, {-0.5, 1.2}};
    m.tris = {{0, 1, 2}, {0, 2, 3}, {0, 2, 4}};
    // Keep areas positive so finalize accepts the mesh; conformity is audit's job.
    for (auto& t : m.tris) {
        Vec2 a = m.nodes[t[0]], b = m.nodes[t[1]], c = m.nodes[t[2]];
        double twice = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if (twice < 0) std::swap(t[1], t[2]);
    }
    m.finalize();
    MeshAudit audit = audit_mesh(m);
    CHECK(!audit.conforming);
    CHECK(!audit.pass());
}

TEST_CASE("mesh text format round trip") {
    auto h = [](double x) { return 1.0 + 0.1 * std::sin(2 * M_PI * x); };
    MeshPtr m = build_graph_mesh(h, 0.0, 1.0, 12, 5, true);

    std::ostringstream out;
    write_mesh(out, *m);
    std::istringstream in(out.str());
    MeshPtr back = read_mesh(in);

    REQUIRE(back->node_count() == m->node_count());
    REQUIRE(back->triangle_count() == m->triangle_count());
    REQUIRE(back->periodic_pairs.size() == m->periodic_pairs.size());
    for (int n = 0; n < m->node_count(); ++n) {
        CHECK(back->nodes[n].x == doctest::Approx(m->nodes[n].x).epsilon(1e-15));
        CHECK(back->nodes[n].y == doctest::Approx(m->nodes[n].y).epsilon(1e-15));
    }
    for (int t = 0; t < m->triangle_count(); ++t) CHECK(back->tris[t] == m->tris[t]);
    CHECK(back->dof_count == m->dof_count);
    CHECK(back->total_area() == doctest::Approx(m->total_area()).epsilon(1e-14));

    SUBCASE("file variant") {
        std::string path = "roundtrip_mesh_test.txt";
        write_mesh_file(path, *m);
        MeshPtr again = read_mesh_file(path);
        CHECK(again->node_count() == m->node_count());
        CHECK(again->total_area() == doctest::Approx(m->total_area()).epsilon(1e-14));
        std::remove(path.c_str());
    }
    SUBCASE("malformed input is rejected") {
        std::istringstream bad1("nodes 3");
        CHECK_THROWS(read_mesh(bad1));
        std::istringstream bad2("nodes 2 triangles 1\n0 0\n1 0\n0 1 5\n");
        CHECK_THROWS(read_mesh(bad2));
        std::istringstream bad3("nodes -1 triangles 0\n");
        CHECK_THROWS(read_mesh(bad3));
    }
}
