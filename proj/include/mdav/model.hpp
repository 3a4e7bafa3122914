#pragma once

#include "mdav/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mdav {

// A normally ordered Hamiltonian of the system-bath class
//   H = H_sys  +  sum_j omega_j a_j^dag a_j  +  sum_{n,j} ( v_{nj} |n><n| a_j + h.c. )
// which covers every model in this library. The kernel evaluated between two
// multi-mode coherent states <alpha_l| ... |alpha_k> / S_lk is
//   H^{nn'}(alpha_l^*, alpha_k) = (H_sys)_{nn'}
//       + delta_{nn'} [ sum_j omega_j alpha_lj^* alpha_kj
//                       + sum_j ( v_{nj} alpha_kj + v_{nj}^* alpha_lj^* ) ].
struct ModelSpec {
    std::string name;           // "spin_boson" | "holstein" | custom
    int n_system = 0;           // N_S
    int n_modes = 0;            // N
    RealVector omega;           // N mode frequencies (> 0)
    RealVector lambda;          // N couplings as discretized (bookkeeping/export)
    Matrix h_sys;               // N_S x N_S
    Matrix v;                   // N_S x N, coupling coefficients v_{nj}

    Vector init_amplitudes;     // N_S, physical initial system amplitudes
    Vector init_displacement;   // N, physical initial displacement of CS #1

    // Mode permutation realizing the model's reflection symmetry, empty if
    // none. Used to mirror the placement grid of unpopulated CS.
    std::vector<int> mode_reflection;

    // Time scale hint for output labeling ("omega_c t", "omega_0 t").
    std::string time_unit = "t";

    int system_dim() const { return n_system; }

    // Kernel H^{nn'}(alpha_l^*, alpha_k), written into `out` (N_S x N_S).
    void eval_h(const Vector& alpha_l, const Vector& alpha_k, Matrix& out) const;

    // Derivative tensor element d H^{nn'} / d alpha_li^*, written into `out`.
    void eval_h_deriv(const Vector& alpha_l, const Vector& alpha_k, int i,
                      Matrix& out) const;

    // w_j = sum_{nn'} conj(A_nl) Htilde^{nn'}_{lkj} A_n'k for all j at once.
    void eval_h_deriv_contracted(const Vector& alpha_l, const Vector& alpha_k,
                                 const Vector& a_col_l, const Vector& a_col_k,
                                 Vector& out) const;

    void validate() const;
};

struct SpinBosonParams {
    double delta = -0.1;      // tunneling amplitude (units of omega_c)
    double alpha_kondo = 0.04;
    double s_exponent = 0.25;
    double omega_c = 1.0;
    int n_modes = 150;
};

struct HolsteinParams {
    int n_sites = 10;         // even; equals the number of phonon modes
    double j_hop = 0.2;
    double omega0 = 1.0;
    double bandwidth = 0.5;   // W, requires W < omega0
    // exactly one of:
    bool constant_coupling = true;
    double g = 0.3;           // used when constant_coupling
    double huang_rhys = 0.3;  // S, used otherwise
    // initial exciton state: localized at site 0, or the symmetric bright state
    bool bright_initial = false;
};

// Sub-Ohmic spectral density J(w) = 2 pi alpha w_c^{1-s} w^s exp(-w/w_c),
// discretized with the exponential density of frequencies
// rho_f(w) = (N/w_c) exp(-w/w_c):  w_j = -w_c ln(1 - (j-1/2)/N) and
// lambda_j^2 = J(w_j) / (pi rho_f(w_j)).
std::pair<RealVector, RealVector> discretize_subohmic(double alpha_kondo, double s,
                                                      double omega_c, int n);

// Couplings from the Holstein spectral density
// J(w) = (2S / pi W^2) w^2 sqrt(W^2 - (w - w0)^2): lambda_n^2 = J(w_n) dw_n / w_n^2
// with per-mode measure dw_n = 2W/(N-1) interior, W/(N-1) at the band edges.
RealVector discretize_holstein_sd(double huang_rhys, double omega0, double bandwidth,
                                  const RealVector& omega);

ModelSpec spin_boson_spec(const SpinBosonParams& p);
ModelSpec holstein_spec(const HolsteinParams& p);

// Site indices of the Holstein chain in storage order: -N/2+1 .. N/2.
std::vector<int> holstein_sites(int n_sites);

}  // namespace mdav
