#include "mdav/linsys.hpp"

#include "mdav/lapack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mdav {

Matrix regularize_rho(const Matrix& rho, double eps_rho, RhoRegularization mode) {
    if (rho.rows() != rho.cols())
        throw DimensionError("rho must be square");
    if (eps_rho < 0.0)
        throw ConfigurationError("eps_rho must be >= 0");
    const double scale = std::max(1.0, rho.cwiseAbs().maxCoeff());
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ContractViolationError("rho must be Hermitian");
    if (eps_rho == 0.0) return rho;
    if (mode == RhoRegularization::Identity)
        return rho + eps_rho * Matrix::Identity(rho.rows(), rho.cols());
    // exp mode: eigenvalue map lambda -> lambda + eps exp(-lambda/eps)
    Matrix u = rho;
    RealVector w;
    lapack::hermitian_eigen(u, w);
    RealVector w2(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
        w2(i) = w(i) + eps_rho * std::exp(-w(i) / eps_rho);
    return u * w2.asDiagonal() * u.adjoint();
}

namespace {

// Closest pair among free representatives, for singular-solve diagnostics.
void closest_free_pair(const EnsembleState& state, int& bl, int& bk, double& bd) {
    const auto reps = state.partition.representatives();
    bl = bk = -1;
    bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < reps.size(); ++i)
        for (std::size_t j = i + 1; j < reps.size(); ++j) {
            const double d = (state.F.row(reps[i]) - state.F.row(reps[j])).norm();
            if (d < bd) { bd = d; bl = reps[i]; bk = reps[j]; }
        }
}

}  // namespace

void assemble(const EnsembleState& state, const ModelSpec& model,
              const RegularizationOptions& reg, SystemBlocks& out) {
    const int ns = state.n_system();
    const int m = state.multiplicity();
    const int n = state.n_modes();
    if (model.n_system != ns || model.n_modes != n)
        throw DimensionError("model and state dimensions differ");
    if (!state.A.allFinite() || !state.F.allFinite())
        throw EvaluationError("state contains non-finite entries", -1, -1);

    const int cs = ns * m;
    const int k_full = cs + n * m;

    out.n_system = ns;
    out.multiplicity = m;
    out.n_modes = n;
    out.folded = false;
    out.groups.clear();
    out.S = overlap_matrix(state.F);
    out.rho = state.A.adjoint() * state.A;
    out.rho_reg = regularize_rho(out.rho, reg.eps_rho, reg.mode);

    if (out.mat.rows() != k_full) out.mat.resize(k_full, k_full);
    out.mat.setZero();
    out.rhs.resize(k_full);

    const Matrix& A = state.A;
    const Matrix& F = state.F;
    const Vector omega_c = model.omega.cast<Complex>();

    // Precomputed contractions shared across pairs.
    const Matrix Fc = F.conjugate();
    const Matrix G = Fc * omega_c.asDiagonal() * F.transpose();  // G(l,k) = sum_j w_j F*_lj F_kj
    const Matrix C = model.v * F.transpose();                    // C(n,k) = sum_j v_nj F_kj
    const Matrix HsysA = model.h_sys * A;

    // Coefficient sector: S (x) identity.
    for (int l = 0; l < m; ++l)
        for (int k = 0; k < m; ++k)
            out.mat.block(l * ns, k * ns, ns, ns).diagonal().setConstant(out.S(l, k));

    // B block: B[(n,l),(j,k)] = F*_lj A_nk S_lk.
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < m; ++k) {
            const int col = cs + j * m + k;
            for (int l = 0; l < m; ++l)
                out.mat.block(l * ns, col, ns, 1) = (Fc(l, j) * out.S(l, k)) * A.col(k);
        }
    // Lower-left block is the adjoint.
    out.mat.bottomLeftCorner(n * m, cs) = out.mat.topRightCorner(cs, n * m).adjoint();

    // D block: D[(i,l),(j,k)] = W_lk (delta_ij + F*_lj F_ki), W = rho_reg o S.
    Matrix W = out.rho_reg.cwiseProduct(out.S);
    if (reg.regularize_d_block) W = out.rho.cwiseProduct(out.S);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            auto blk = out.mat.block(cs + i * m, cs + j * m, m, m);
            blk = (Fc.col(j) * F.col(i).transpose()).cwiseProduct(W);
            if (i == j) blk += W;
        }
    if (reg.regularize_d_block && reg.eps_rho > 0.0) {
        // Comparison-harness variant: D + delta exp(-rho/delta) on each
        // diagonal mode block.
        Matrix u = out.rho;
        RealVector w;
        lapack::hermitian_eigen(u, w);
        RealVector w2(w.size());
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w2(i) = reg.eps_rho * std::exp(-w(i) / reg.eps_rho);
        const Matrix bump = u * w2.asDiagonal() * u.adjoint();
        for (int i = 0; i < n; ++i)
            out.mat.block(cs + i * m, cs + i * m, m, m) += bump;
    }

    // Right-hand sides.
    Matrix r_mat = Matrix::Zero(ns, m);   // (n, l)
    Matrix s_mat = Matrix::Zero(m, n);    // (l, j)
    Vector w_vec(n), u_vec(ns), hk(ns);
    for (int l = 0; l < m; ++l) {
        const Vector c_l_conj = C.col(l).conjugate();
        for (int k = 0; k < m; ++k) {
            const Complex slk = out.S(l, k);
            // H_lk acting on A_k, using H = h_sys + diag(G_lk + C_nk + C*_nl)
            hk = HsysA.col(k) + G(l, k) * A.col(k) +
                 (C.col(k) + c_l_conj).cwiseProduct(A.col(k));
            r_mat.col(l) += slk * hk;
            // rho-weighted H and the contracted derivative tensor
            const Complex rho_h = A.col(l).dot(hk);
            u_vec = A.col(l).conjugate().cwiseProduct(A.col(k));
            w_vec = out.rho(l, k) * omega_c.cwiseProduct(F.row(k).transpose());
            w_vec.noalias() += model.v.adjoint() * u_vec;
            if (!std::isfinite(rho_h.real()) || !std::isfinite(rho_h.imag()) ||
                !w_vec.allFinite())
                throw EvaluationError("non-finite Hamiltonian evaluation", l, k);
            s_mat.row(l) += slk * (rho_h * F.row(k) + w_vec.transpose());
        }
    }
    out.rhs.head(cs) = Eigen::Map<const Vector>(r_mat.data(), cs);
    out.rhs.tail(n * m) = Eigen::Map<const Vector>(s_mat.data(), n * m);
}

SystemBlocks assemble(const EnsembleState& state, const ModelSpec& model,
                      const RegularizationOptions& reg) {
    SystemBlocks out;
    assemble(state, model, reg, out);
    return out;
}

void fold_apoptosis(SystemBlocks& blocks, const ConnectivityPartition& partition) {
    partition.validate();
    const int m = blocks.multiplicity;
    const int n = blocks.n_modes;
    const int cs = blocks.coef_size();
    blocks.groups = partition.representatives();
    if (static_cast<int>(blocks.groups.size()) == m) {
        blocks.folded = true;
        return;  // all singletons
    }

    // Accumulate member displacement columns/rows onto their representative.
    for (int l = 0; l < m; ++l) {
        const int r = partition.representative_of(l);
        if (r == l) continue;
        for (int j = 0; j < n; ++j)
            blocks.mat.col(cs + j * m + r) += blocks.mat.col(cs + j * m + l);
    }
    for (int l = 0; l < m; ++l) {
        const int r = partition.representative_of(l);
        if (r == l) continue;
        for (int j = 0; j < n; ++j) {
            blocks.mat.row(cs + j * m + r) += blocks.mat.row(cs + j * m + l);
            blocks.rhs(cs + j * m + r) += blocks.rhs(cs + j * m + l);
        }
    }

    // Compact kept rows/columns.
    const int g = static_cast<int>(blocks.groups.size());
    std::vector<int> keep;
    keep.reserve(cs + n * g);
    for (int i = 0; i < cs; ++i) keep.push_back(i);
    for (int j = 0; j < n; ++j)
        for (int slot = 0; slot < g; ++slot)
            keep.push_back(cs + j * m + blocks.groups[slot]);

    const int k_red = static_cast<int>(keep.size());
    Matrix red(k_red, k_red);
    Vector rhs_red(k_red);
    for (int c = 0; c < k_red; ++c) {
        const auto& src = blocks.mat.col(keep[c]);
        for (int r = 0; r < k_red; ++r) red(r, c) = src(keep[r]);
        rhs_red(c) = blocks.rhs(keep[c]);
    }
    blocks.mat.swap(red);
    blocks.rhs.swap(rhs_red);
    blocks.folded = true;
}

DerivativeSet solve(SystemBlocks& blocks, const EnsembleState& state) {
    if (!blocks.folded) fold_apoptosis(blocks, state.partition);
    const int ns = blocks.n_system;
    const int m = blocks.multiplicity;
    const int n = blocks.n_modes;
    const int cs = ns * m;
    const int g = static_cast<int>(blocks.groups.size());

    lapack::LuSolver lu;
    const bool ok = lu.factor(blocks.mat);
    Vector sol = blocks.rhs;
    if (ok) lu.solve(sol);
    if (!ok || !sol.allFinite() || lu.rcond() < 1e-17) {
        int bl, bk;
        double bd;
        closest_free_pair(state, bl, bk, bd);
        throw SingularSystemError("saddle-point system is numerically singular",
                                  lu.rcond(), bl, bk, bd);
    }
    // i M z = rhs  =>  z = -i (M^{-1} rhs)
    sol *= -IMAG_UNIT;

    DerivativeSet out;
    out.rcond = lu.rcond();
    out.X = Eigen::Map<const Matrix>(sol.data(), ns, m);
    const Eigen::Map<const Matrix> y(sol.data() + cs, g, n);
    out.Fdot.resize(m, n);
    std::vector<int> slot_of(m, -1);
    for (int s = 0; s < g; ++s) slot_of[blocks.groups[s]] = s;
    for (int l = 0; l < m; ++l)
        out.Fdot.row(l) = y.row(slot_of[state.partition.representative_of(l)]);
    out.Adot = recover_Adot(out.X, state, out.Fdot);
    return out;
}

Matrix recover_Adot(const Matrix& X, const EnsembleState& state, const Matrix& Fdot) {
    Matrix adot = X;
    for (int k = 0; k < state.multiplicity(); ++k) {
        const double corr = Fdot.row(k).cwiseProduct(state.F.row(k).conjugate()).sum().real();
        adot.col(k) += corr * state.A.col(k);
    }
    return adot;
}

}  // namespace mdav
