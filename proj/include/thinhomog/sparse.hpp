#pragma once

#include <cstddef>
#include <vector>

namespace thinhomog {

// Square CSR matrix assembled from (row, col, value) triplets; duplicates sum.
class SparseMatrix {
public:
    SparseMatrix() = default;
    explicit SparseMatrix(int n) : n_(n) {}

    int size() const { return n_; }
    void add(int i, int j, double v) { triplets_.push_back({i, j, v}); }
    void compress();
    bool compressed() const { return compressed_; }

    void matvec(const std::vector<double>& x, std::vector<double>& y) const;
    std::vector<double> diagonal() const;

private:
    struct Triplet {
        int i, j;
        double v;
    };
    int n_ = 0;
    bool compressed_ = false;
    std::vector<Triplet> triplets_;
    std::vector<int> row_ptr_, col_;
    std::vector<double> val_;
};

struct CgResult {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0; // final ||r|| / ||b||
};

// Jacobi-preconditioned conjugate gradients. With deflate_constants the constant
// vector is projected out of the right-hand side and all iterates, which handles
// the pure-Neumann / periodic null space (A * 1 = 0, b orthogonal to 1).
CgResult pcg(const SparseMatrix& A, const std::vector<double>& b, std::vector<double>& x,
             double tol, int max_iter, bool deflate_constants);

} // namespace thinhomog
