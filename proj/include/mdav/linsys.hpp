#pragma once

#include "mdav/ensemble.hpp"
#include "mdav/model.hpp"
#include "mdav/types.hpp"

namespace mdav {

enum class RhoRegularization { Exp, Identity };

struct RegularizationOptions {
    double eps_rho = 1e-8;
    RhoRegularization mode = RhoRegularization::Exp;
    // Rejected variant kept for the comparison harness only: regularize the
    // D block as D + delta exp(-rho/delta) instead of rho.
    bool regularize_d_block = false;
};

// Assembled saddle-point system  i [[S (x) 1_NS, B], [B^dag, D]] [x; y] = [r; s]
// in one dense Hermitian matrix. Index layout:
//   coefficient sector row (n, l) -> l * N_S + n
//   displacement sector row (j, l) -> N_S M + j * M + l   (mode-major)
struct SystemBlocks {
    int n_system = 0, multiplicity = 0, n_modes = 0;
    Matrix S;        // M x M overlap matrix
    Matrix rho;      // M x M single-particle density matrix, unregularized
    Matrix rho_reg;  // regularized copy used in the D block
    Matrix mat;      // K x K full system matrix, K = N_S M + N M
    Vector rhs;      // K right-hand side [r; s]

    int coef_size() const { return n_system * multiplicity; }
    int disp_size() const { return static_cast<int>(mat.rows()) - coef_size(); }

    // Views on the blocks of `mat`.
    auto s_tilde() const { return mat.topLeftCorner(coef_size(), coef_size()); }
    auto b_block() const { return mat.topRightCorner(coef_size(), disp_size()); }
    auto d_block() const { return mat.bottomRightCorner(disp_size(), disp_size()); }
    auto r_vector() const { return rhs.head(coef_size()); }
    auto s_vector() const { return rhs.tail(disp_size()); }

    // Set after fold(): representative list and member map.
    std::vector<int> groups;              // representative index per reduced slot
    bool folded = false;
};

struct DerivativeSet {
    Matrix X;     // N_S x M auxiliary variables
    Matrix Fdot;  // M x N displacement derivatives (members duplicated)
    Matrix Adot;  // N_S x M recovered coefficient derivatives
    double rcond = 0.0;
};

// Eigenvalue-wise regularization of the Hermitian rho matrix.
Matrix regularize_rho(const Matrix& rho, double eps_rho, RhoRegularization mode);

// Build the full-size system from the current state. The D block is formed
// with the regularized rho.
void assemble(const EnsembleState& state, const ModelSpec& model,
              const RegularizationOptions& reg, SystemBlocks& out);
SystemBlocks assemble(const EnsembleState& state, const ModelSpec& model,
                      const RegularizationOptions& reg = {});

// Fold the displacement rows/columns of connected members into their
// representative (sums), dropping the member rows/columns. Coefficient
// sector is untouched.
void fold_apoptosis(SystemBlocks& blocks, const ConnectivityPartition& partition);

// LU solve of the (folded) system; unfolds y back to the full M x N layout.
DerivativeSet solve(SystemBlocks& blocks, const EnsembleState& state);

// Adot_{nk} = X_{nk} + A_{nk} sum_j Re(Fdot_{kj} conj(F_{kj})).
Matrix recover_Adot(const Matrix& X, const EnsembleState& state, const Matrix& Fdot);

}  // namespace mdav
