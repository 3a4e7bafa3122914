#pragma once

#include "mdav/types.hpp"

#include <vector>

namespace mdav::lapack {

// Dense complex LU factorization with partial pivoting plus a reciprocal
// condition estimate from the factors. Backed by LAPACK (zgetrf/zgecon)
// when available, Eigen otherwise.
class LuSolver {
public:
    // Factor `a` in place (a is overwritten with the LU factors).
    // Returns false if an exactly zero pivot was met.
    bool factor(Matrix& a);

    // Solve A x = b using the stored factors; b is overwritten with x.
    void solve(Vector& b) const;

    // Reciprocal 1-norm condition estimate of the factored matrix.
    double rcond() const { return rcond_; }

private:
    Matrix* lu_ = nullptr;
    std::vector<int> ipiv_;
    double rcond_ = 0.0;
};

// Hermitian eigendecomposition: a = U diag(w) U^dagger. `a` is overwritten
// with the eigenvectors U; `w` receives ascending eigenvalues.
void hermitian_eigen(Matrix& a, RealVector& w);

}  // namespace mdav::lapack
