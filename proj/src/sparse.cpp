#include "thinhomog/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace thinhomog {

void SparseMatrix::compress() {
    if (compressed_)
        return;
    std::sort(triplets_.begin(), triplets_.end(), [](const Triplet& a, const Triplet& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    row_ptr_.assign(n_ + 1, 0);
    col_.clear();
    val_.clear();
    for (std::size_t k = 0; k < triplets_.size();) {
        int i = triplets_[k].i, j = triplets_[k].j;
        double v = 0.0;
        while (k < triplets_.size() && triplets_[k].i == i && triplets_[k].j == j)
            v += triplets_[k++].v;
        col_.push_back(j);
        val_.push_back(v);
        row_ptr_[i + 1]++;
    }
    for (int i = 0; i < n_; ++i)
        row_ptr_[i + 1] += row_ptr_[i];
    triplets_.clear();
    triplets_.shrink_to_fit();
    compressed_ = true;
}

void SparseMatrix::matvec(const std::vector<double>& x, std::vector<double>& y) const {
    if (!compressed_)
        throw std::runtime_error("SparseMatrix: matvec before compress");
    y.assign(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            s += val_[k] * x[col_[k]];
        y[i] = s;
    }
}

std::vector<double> SparseMatrix::diagonal() const {
    if (!compressed_)
        throw std::runtime_error("SparseMatrix: diagonal before compress");
    std::vector<double> d(n_, 0.0);
    for (int i = 0; i < n_; ++i)
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            if (col_[k] == i)
                d[i] = val_[k];
    return d;
}

namespace {

double dot_vec(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

void remove_mean(std::vector<double>& v) {
    double m = 0.0;
    for (double x : v)
        m += x;
    m /= static_cast<double>(v.size());
    for (double& x : v)
        x -= m;
}

} // namespace

CgResult pcg(const SparseMatrix& A, const std::vector<double>& b, std::vector<double>& x,
             double tol, int max_iter, bool deflate_constants) {
    const int n = A.size();
    CgResult res;
    x.assign(n, 0.0);

    std::vector<double> r = b;
    if (deflate_constants)
        remove_mean(r);
    double bnorm = std::sqrt(dot_vec(r, r));
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }

    std::vector<double> diag = A.diagonal();
    for (double& d : diag)
        d = (d > 0.0) ? 1.0 / d : 1.0;

    std::vector<double> z(n), p(n), Ap(n);
    auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
        for (int i = 0; i < n; ++i)
            out[i] = diag[i] * in[i];
        if (deflate_constants)
            remove_mean(out);
    };

    precond(r, z);
    p = z;
    double rz = dot_vec(r, z);
    for (int it = 0; it < max_iter; ++it) {
        A.matvec(p, Ap);
        if (deflate_constants)
            remove_mean(Ap);
        double pAp = dot_vec(p, Ap);
        if (!(pAp > 0.0)) {
            // Curvature loss signals an indefinite or fully converged system.
            res.iterations = it;
            res.residual = std::sqrt(dot_vec(r, r)) / bnorm;
            res.converged = res.residual <= tol;
            return res;
        }
        double alpha = rz / pAp;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        double rnorm = std::sqrt(dot_vec(r, r));
        if (rnorm <= tol * bnorm) {
            res.converged = true;
            res.iterations = it + 1;
            res.residual = rnorm / bnorm;
            if (deflate_constants)
                remove_mean(x);
            return res;
        }
        precond(r, z);
        double rz_next = dot_vec(r, z);
        double beta = rz_next / rz;
        rz = rz_next;
        for (int i = 0; i < n; ++i)
            p[i] = z[i] + beta * p[i];
    }
    res.iterations = max_iter;
    res.residual = std::sqrt(dot_vec(r, r)) / bnorm;
    res.converged = res.residual <= tol;
    if (deflate_constants)
        remove_mean(x);
    return res;
}

} // namespace thinhomog
