#include "mdav/lapack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef MDAV_HAVE_LAPACK
extern "C" {
void zgetrf_(const int* m, const int* n, mdav::Complex* a, const int* lda,
             int* ipiv, int* info);
void zgetrs_(const char* trans, const int* n, const int* nrhs, const mdav::Complex* a,
             const int* lda, const int* ipiv, mdav::Complex* b, const int* ldb, int* info);
void zgecon_(const char* norm, const int* n, const mdav::Complex* a, const int* lda,
             const double* anorm, double* rcond, mdav::Complex* work, double* rwork,
             int* info);
void zheevd_(const char* jobz, const char* uplo, const int* n, mdav::Complex* a,
             const int* lda, double* w, mdav::Complex* work, const int* lwork,
             double* rwork, const int* lrwork, int* iwork, const int* liwork, int* info);
}
#endif

namespace mdav::lapack {

bool LuSolver::factor(Matrix& a) {
    const int n = static_cast<int>(a.rows());
    lu_ = &a;
    ipiv_.resize(n);
    rcond_ = 0.0;
#ifdef MDAV_HAVE_LAPACK
    const double anorm = a.cwiseAbs().colwise().sum().maxCoeff();
    int info = 0;
    zgetrf_(&n, &n, a.data(), &n, ipiv_.data(), &info);
    if (info > 0) return false;
    std::vector<Complex> work(2 * n);
    std::vector<double> rwork(2 * n);
    zgecon_("1", &n, a.data(), &n, &anorm, &rcond_, work.data(), rwork.data(), &info);
    return true;
#else
    // Unblocked right-looking LU with partial pivoting; ipiv_ records the
    // row swap done at each elimination step, LAPACK style.
    double umax = 0.0, umin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
        int p = j;
        double best = std::abs(a(j, j));
        for (int i = j + 1; i < n; ++i) {
            const double v = std::abs(a(i, j));
            if (v > best) { best = v; p = i; }
        }
        ipiv_[j] = p;
        if (best == 0.0) return false;
        if (p != j) a.row(p).swap(a.row(j));
        umax = std::max(umax, best);
        umin = std::min(umin, best);
        const Complex pivot = a(j, j);
        for (int i = j + 1; i < n; ++i) {
            const Complex m = a(i, j) / pivot;
            a(i, j) = m;
            a.row(i).tail(n - j - 1) -= m * a.row(j).tail(n - j - 1);
        }
    }
    // Crude estimate from the pivot ratio; only used for logging.
    rcond_ = (umax > 0.0) ? umin / umax : 0.0;
    return true;
#endif
}

void LuSolver::solve(Vector& b) const {
    const int n = static_cast<int>(b.size());
#ifdef MDAV_HAVE_LAPACK
    const int one = 1;
    int info = 0;
    zgetrs_("N", &n, &one, lu_->data(), &n, ipiv_.data(), b.data(), &n, &info);
#else
    for (int i = 0; i < n; ++i)
        if (ipiv_[i] != i) std::swap(b(i), b(ipiv_[i]));
    const Matrix& a = *lu_;
    for (int i = 1; i < n; ++i)
        b(i) -= (a.row(i).head(i) * b.head(i))(0);
    for (int i = n - 1; i >= 0; --i) {
        b(i) -= (a.row(i).tail(n - i - 1) * b.tail(n - i - 1))(0);
        b(i) /= a(i, i);
    }
#endif
}

void hermitian_eigen(Matrix& a, RealVector& w) {
    const int n = static_cast<int>(a.rows());
    w.resize(n);
#ifdef MDAV_HAVE_LAPACK
    int info = 0;
    int lwork = -1, lrwork = -1, liwork = -1;
    Complex wk;
    double rwk;
    int iwk;
    zheevd_("V", "L", &n, a.data(), &n, w.data(), &wk, &lwork, &rwk, &lrwork,
            &iwk, &liwork, &info);
    lwork = static_cast<int>(wk.real());
    lrwork = static_cast<int>(rwk);
    liwork = iwk;
    std::vector<Complex> work(lwork);
    std::vector<double> rwork(lrwork);
    std::vector<int> iwork(liwork);
    zheevd_("V", "L", &n, a.data(), &n, w.data(), work.data(), &lwork,
            rwork.data(), &lrwork, iwork.data(), &liwork, &info);
    if (info != 0) throw std::runtime_error("zheevd failed");
#else
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("hermitian eigendecomposition failed");
    w = es.eigenvalues();
    a = es.eigenvectors();
#endif
}

}  // namespace mdav::lapack
