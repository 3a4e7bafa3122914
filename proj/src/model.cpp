#include "mdav/model.hpp"

#include <cmath>

namespace mdav {

void ModelSpec::eval_h(const Vector& alpha_l, const Vector& alpha_k, Matrix& out) const {
    out = h_sys;
    const Complex bath = alpha_l.conjugate().cwiseProduct(omega.cast<Complex>())
                             .cwiseProduct(alpha_k).sum();
    for (int n = 0; n < n_system; ++n) {
        const Complex c = v.row(n) * alpha_k;
        const Complex d = std::conj((v.row(n) * alpha_l)(0, 0));
        out(n, n) += bath + c + d;
    }
}

void ModelSpec::eval_h_deriv(const Vector& alpha_l, const Vector& alpha_k, int i,
                             Matrix& out) const {
    (void)alpha_l;
    out.setZero(n_system, n_system);
    const Complex base = omega(i) * alpha_k(i);
    for (int n = 0; n < n_system; ++n)
        out(n, n) = base + std::conj(v(n, i));
}

void ModelSpec::eval_h_deriv_contracted(const Vector& alpha_l, const Vector& alpha_k,
                                        const Vector& a_col_l, const Vector& a_col_k,
                                        Vector& out) const {
    (void)alpha_l;
    const Complex rho_lk = a_col_l.dot(a_col_k);
    out = rho_lk * omega.cast<Complex>().cwiseProduct(alpha_k);
    out.noalias() += v.adjoint() * a_col_l.conjugate().cwiseProduct(a_col_k);
}

void ModelSpec::validate() const {
    if (n_system < 1 || n_modes < 1)
        throw ConfigurationError("model dimensions must be >= 1");
    if (omega.size() != n_modes || v.rows() != n_system || v.cols() != n_modes ||
        h_sys.rows() != n_system || h_sys.cols() != n_system ||
        init_amplitudes.size() != n_system || init_displacement.size() != n_modes)
        throw DimensionError("model field dimensions are inconsistent");
    for (int j = 0; j < n_modes; ++j)
        if (!(omega(j) > 0.0) || !std::isfinite(omega(j)))
            throw ConfigurationError("mode frequencies must be positive and finite");
    if ((h_sys - h_sys.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw ConfigurationError("system Hamiltonian block must be Hermitian");
    if (!v.allFinite() || !init_amplitudes.allFinite() || !init_displacement.allFinite())
        throw ConfigurationError("model contains non-finite parameters");
}

std::pair<RealVector, RealVector> discretize_subohmic(double alpha_kondo, double s,
                                                      double omega_c, int n) {
    if (n < 1) throw ConfigurationError("mode count must be >= 1");
    if (omega_c <= 0.0 || s <= 0.0 || alpha_kondo < 0.0)
        throw ConfigurationError("invalid sub-Ohmic parameters");
    RealVector omega(n), lambda(n);
    for (int j = 0; j < n; ++j) {
        const double quantile = (j + 0.5) / n;
        omega(j) = -omega_c * std::log(1.0 - quantile);
        // J(w) = 2 pi alpha w_c^{1-s} w^s e^{-w/w_c},  rho_f = (N/w_c) e^{-w/w_c}
        lambda(j) = std::sqrt(2.0 * alpha_kondo / n) * std::pow(omega_c, 1.0 - s / 2.0) *
                    std::pow(omega(j), s / 2.0);
    }
    return {omega, lambda};
}

ModelSpec spin_boson_spec(const SpinBosonParams& p) {
    ModelSpec m;
    m.name = "spin_boson";
    m.n_system = 2;
    m.n_modes = p.n_modes;
    auto [omega, lambda] = discretize_subohmic(p.alpha_kondo, p.s_exponent, p.omega_c, p.n_modes);
    m.omega = omega;
    m.lambda = lambda;
    m.h_sys = Matrix::Zero(2, 2);
    m.h_sys(0, 1) = 0.5 * p.delta;
    m.h_sys(1, 0) = 0.5 * p.delta;
    // basis {|+>, |->} of sigma_z; coupling -(1/2) sigma_z sum lambda_j (a + a^dag)
    m.v = Matrix::Zero(2, p.n_modes);
    m.v.row(0) = (-0.5 * lambda).transpose().cast<Complex>();
    m.v.row(1) = (0.5 * lambda).transpose().cast<Complex>();
    m.init_amplitudes = Vector::Zero(2);
    m.init_amplitudes(0) = 1.0;
    // bath equilibrated to |+>: d_j = lambda_j / (2 omega_j)
    m.init_displacement = (lambda.array() / (2.0 * omega.array())).matrix().cast<Complex>();
    m.time_unit = "omega_c t";
    m.validate();
    return m;
}

std::vector<int> holstein_sites(int n_sites) {
    std::vector<int> sites(n_sites);
    for (int a = 0; a < n_sites; ++a) sites[a] = a - n_sites / 2 + 1;
    return sites;
}

RealVector discretize_holstein_sd(double huang_rhys, double omega0, double bandwidth,
                                  const RealVector& omega) {
    const int n = static_cast<int>(omega.size());
    RealVector lambda(n);
    const double wlo = omega0 - bandwidth, whi = omega0 + bandwidth;
    for (int a = 0; a < n; ++a) {
        const double w = omega(a);
        if (w < wlo - 1e-12 || w > whi + 1e-12)
            throw ConfigurationError("mode frequency outside the phonon band");
        const double band = bandwidth * bandwidth - (w - omega0) * (w - omega0);
        const double j_w = (2.0 * huang_rhys / (M_PI * bandwidth * bandwidth)) * w * w *
                           std::sqrt(std::max(band, 0.0));
        const bool edge = std::abs(w - wlo) < 1e-12 || std::abs(w - whi) < 1e-12;
        const double dw = (edge ? 1.0 : 2.0) * bandwidth / (n - 1);
        lambda(a) = std::sqrt(j_w * dw) / w;
    }
    return lambda;
}

ModelSpec holstein_spec(const HolsteinParams& p) {
    if (p.n_sites < 2 || p.n_sites % 2 != 0)
        throw ConfigurationError("Holstein chain requires an even number of sites >= 2");
    if (!(p.bandwidth < p.omega0))
        throw ConfigurationError("phonon bandwidth must satisfy W < omega0");
    const int n = p.n_sites;
    ModelSpec m;
    m.name = "holstein";
    m.n_system = n;
    m.n_modes = n;
    const std::vector<int> sites = holstein_sites(n);

    RealVector q(n);
    m.omega.resize(n);
    for (int a = 0; a < n; ++a) {
        q(a) = 2.0 * M_PI * sites[a] / n;
        m.omega(a) = p.omega0 + p.bandwidth * (2.0 * std::abs(q(a)) / M_PI - 1.0);
    }
    if (p.constant_coupling) {
        m.lambda = RealVector::Constant(n, p.g / std::sqrt(static_cast<double>(n)));
    } else {
        m.lambda = discretize_holstein_sd(p.huang_rhys, p.omega0, p.bandwidth, m.omega);
    }

    m.h_sys = Matrix::Zero(n, n);
    for (int a = 0; a < n; ++a) {
        const int b = (a + 1) % n;
        m.h_sys(a, b) += -p.j_hop;
        m.h_sys(b, a) += -p.j_hop;
    }
    m.v = Matrix::Zero(n, n);
    for (int mi = 0; mi < n; ++mi)
        for (int ni = 0; ni < n; ++ni)
            m.v(mi, ni) = m.lambda(ni) * m.omega(ni) *
                          std::exp(IMAG_UNIT * (q(ni) * static_cast<double>(sites[mi])));

    m.init_amplitudes = Vector::Zero(n);
    if (p.bright_initial) {
        m.init_amplitudes.setConstant(1.0 / std::sqrt(static_cast<double>(n)));
    } else {
        const int site0 = n / 2 - 1;  // storage index of site 0
        m.init_amplitudes(site0) = 1.0;
    }
    m.init_displacement = Vector::Zero(n);  // phonon vacuum

    // site/mode reflection n -> -n; the q = pi mode maps to itself
    m.mode_reflection.resize(n);
    for (int a = 0; a < n; ++a)
        m.mode_reflection[a] = (a == n - 1) ? a : n - 2 - a;
    m.time_unit = "omega_0 t";
    m.validate();
    return m;
}

}  // namespace mdav
