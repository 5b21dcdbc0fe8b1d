#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "thinhomog/sparse.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace thinhomog;

namespace {

// Dense mirror used as the matvec oracle.
struct Dense {
    int n;
    std::vector<double> a;
    explicit Dense(int n) : n(n), a(n * n, 0.0) {}
    void add(int i, int j, double v) { a[i * n + j] += v; }
    std::vector<double> mul(const std::vector<double>& x) const {
        std::vector<double> y(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) y[i] += a[i * n + j] * x[j];
        return y;
    }
};

// 1D Neumann graph Laplacian: singular, kernel = constants.
SparseMatrix neumann_laplacian(int n) {
    SparseMatrix A(n);
    for (int i = 0; i + 1 < n; ++i) {
        A.add(i, i, 1.0);
        A.add(i + 1, i + 1, 1.0);
        A.add(i, i + 1, -1.0);
        A.add(i + 1, i, -1.0);
    }
    A.compress();
    return A;
}

} // namespace

TEST_CASE("triplets with duplicates compress by summation") {
    SparseMatrix A(3);
    A.add(0, 0, 1.0);
    A.add(0, 0, 2.0); // duplicate, sums to 3
    A.add(0, 2, -1.0);
    A.add(1, 1, 5.0);
    A.add(2, 0, 4.0);
    A.add(2, 2, 0.5);
    A.add(2, 2, 0.5);
    A.compress();
    CHECK(A.compressed());

    std::vector<double> x = {1.0, 2.0, 3.0}, y;
    A.matvec(x, y);
    CHECK(y[0] == doctest::Approx(3.0 * 1 - 1.0 * 3));
    CHECK(y[1] == doctest::Approx(10.0));
    CHECK(y[2] == doctest::Approx(4.0 * 1 + 1.0 * 3));

    std::vector<double> d = A.diagonal();
    CHECK(d[0] == doctest::Approx(3.0));
    CHECK(d[1] == doctest::Approx(5.0));
    CHECK(d[2] == doctest::Approx(1.0));
}

TEST_CASE("matvec agrees with a dense mirror on random sparse matrices") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> pick(0, 19);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
        int n = 20;
        SparseMatrix A(n);
        Dense D(n);
        for (int k = 0; k < 120; ++k) {
            int i = pick(rng), j = pick(rng);
            double v = val(rng);
            A.add(i, j, v);
            D.add(i, j, v);
        }
        A.compress();
        std::vector<double> x(n);
        for (auto& xi : x) xi = val(rng);
        std::vector<double> y, z = D.mul(x);
        A.matvec(x, y);
        for (int i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(z[i]).epsilon(1e-13));
    }
}

TEST_CASE("usage before compress is rejected") {
    SparseMatrix A(2);
    A.add(0, 0, 1.0);
    std::vector<double> x = {1.0, 1.0}, y;
    CHECK_THROWS(A.matvec(x, y));
    CHECK_THROWS(A.diagonal());
}

TEST_CASE("pcg solves an SPD system to tolerance") {
    // Shifted 1D Laplacian: tridiagonal, definite, well conditioned.
    int n = 50;
    SparseMatrix A(n);
    for (int i = 0; i < n; ++i) {
        A.add(i, i, 2.5);
        if (i + 1 < n) {
            A.add(i, i + 1, -1.0);
            A.add(i + 1, i, -1.0);
        }
    }
    A.compress();

    std::vector<double> want(n);
    for (int i = 0; i < n; ++i) want[i] = std::sin(0.3 * i) + 0.1 * i;
    std::vector<double> b;
    A.matvec(want, b);

    std::vector<double> x(n, 0.0);
    CgResult res = pcg(A, b, x, 1e-12, 10 * n, false);
    CHECK(res.converged);
    CHECK(res.residual <= 1e-12);
    for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(want[i]).epsilon(1e-9));

    SUBCASE("iteration cap reports failure") {
        std::vector<double> x2(n, 0.0);
        CgResult capped = pcg(A, b, x2, 1e-14, 2, false);
        CHECK(!capped.converged);
    }
}

TEST_CASE("constant deflation handles the Neumann null space") {
    int n = 40;
    SparseMatrix A = neumann_laplacian(n);

    // Zero-mean right-hand side: solvable, solution unique up to constants.
    std::vector<double> b(n);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        b[i] = std::cos(2 * M_PI * i / n);
        mean += b[i];
    }
    for (auto& v : b) v -= mean / n;

    std::vector<double> x(n, 0.0);
    CgResult res = pcg(A, b, x, 1e-12, 20 * n, true);
    CHECK(res.converged);

    // Residual really is small and the returned iterate has zero mean.
    std::vector<double> Ax;
    A.matvec(x, Ax);
    double rnorm = 0.0, bnorm = 0.0, xmean = 0.0;
    for (int i = 0; i < n; ++i) {
        rnorm += (Ax[i] - b[i]) * (Ax[i] - b[i]);
        bnorm += b[i] * b[i];
        xmean += x[i];
    }
    CHECK(std::sqrt(rnorm) <= 1e-10 * std::sqrt(bnorm));
    CHECK(std::fabs(xmean / n) <= 1e-10);
}
