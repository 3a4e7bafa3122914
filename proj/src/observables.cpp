#include "mdav/observables.hpp"

#include <algorithm>
#include <cmath>

namespace mdav {

double population_z(const EnsembleState& state) {
    if (state.n_system() != 2)
        throw DimensionError("population_z requires a two-level system");
    const Matrix S = overlap_matrix(state.F);
    const Matrix up = state.A.row(0).adjoint() * state.A.row(0);
    const Matrix dn = state.A.row(1).adjoint() * state.A.row(1);
    return (up - dn).cwiseProduct(S).sum().real();
}

RealVector exciton_density(const EnsembleState& state) {
    const Matrix S = overlap_matrix(state.F);
    RealVector rho(state.n_system());
    for (int n = 0; n < state.n_system(); ++n) {
        const Matrix occ = state.A.row(n).adjoint() * state.A.row(n);
        rho(n) = occ.cwiseProduct(S).sum().real();
    }
    return rho;
}

double energy(const EnsembleState& state, const ModelSpec& model) {
    const Matrix S = overlap_matrix(state.F);
    const int m = state.multiplicity();
    Matrix h(model.n_system, model.n_system);
    Complex acc = 0.0;
    for (int l = 0; l < m; ++l)
        for (int k = 0; k < m; ++k) {
            model.eval_h(state.F.row(l).transpose(), state.F.row(k).transpose(), h);
            acc += S(l, k) * (state.A.col(l).adjoint() * h * state.A.col(k))(0, 0);
        }
    return acc.real();
}

Complex autocorrelation_value(const EnsembleState& state) {
    const int n_sites = state.n_system();
    const double root_n = std::sqrt(static_cast<double>(n_sites));
    Complex f = 0.0;
    for (int k = 0; k < state.multiplicity(); ++k) {
        const Complex site_sum = state.A.col(k).sum() / root_n;
        const Complex vac_overlap = std::exp(Complex(-0.5 * state.F.row(k).squaredNorm(), 0.0));
        f += site_sum * vac_overlap;
    }
    return f;
}

RealSeries absorption_spectrum(const ComplexSeries& f, const SpectrumOptions& opts) {
    f.validate();
    if (f.size() < 4) throw ConfigurationError("autocorrelation series too short");
    const double t0 = f.times.front();
    const double t_span = f.times.back() - t0;
    const double dt = f.times[1] - f.times[0];
    const double damping = opts.damping > 0.0 ? opts.damping : t_span / 5.0;

    double wmin = opts.omega_min, wmax = opts.omega_max;
    if (wmin == 0.0 && wmax == 0.0) {
        const double nyquist = M_PI / dt;
        wmin = -nyquist;
        wmax = nyquist;
    }
    const double dw = 2.0 * M_PI / (opts.pad_factor * t_span);
    const int n_w = std::max(2, static_cast<int>(std::floor((wmax - wmin) / dw)) + 1);

    RealSeries out;
    out.times.resize(n_w);
    out.values.resize(n_w);
    const std::size_t nt = f.size();
    std::vector<Complex> damped(nt);
    for (std::size_t i = 0; i < nt; ++i) {
        const double t = f.times[i] - t0;
        const double w_trap = (i == 0 || i + 1 == nt) ? 0.5 : 1.0;
        damped[i] = f.values[i] * std::exp(-t / damping) * w_trap;
    }
    double total = 0.0;
    for (int iw = 0; iw < n_w; ++iw) {
        const double omega = wmin + iw * dw;
        Complex acc = 0.0;
        for (std::size_t i = 0; i < nt; ++i) {
            const double t = f.times[i] - t0;
            acc += damped[i] * std::exp(IMAG_UNIT * (omega * t));
        }
        out.times[iw] = omega;
        out.values[iw] = (dt / M_PI) * acc.real();
        total += out.values[iw] * dw;
    }
    if (std::abs(total) > 0.0)
        for (auto& v : out.values) v /= total;
    return out;
}

double error_measure(const RealSeries& reference, const RealSeries& candidate) {
    reference.validate();
    candidate.validate();
    if (reference.size() != candidate.size())
        throw DimensionError("series lengths differ");
    for (std::size_t i = 0; i < reference.size(); ++i)
        if (std::abs(reference.times[i] - candidate.times[i]) >
            1e-9 * std::max(1.0, std::abs(reference.times[i])))
            throw ConfigurationError("series time grids differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i)
        acc += std::abs(reference.values[i] - candidate.values[i]);
    return acc / static_cast<double>(reference.size());
}

std::vector<SpectrumPeak> find_peaks(const RealSeries& spectrum, double band_width,
                                     double threshold) {
    const auto& w = spectrum.times;
    const auto& v = spectrum.values;
    const int n = static_cast<int>(w.size());
    if (n < 3) return {};
    const double vmax = *std::max_element(v.begin(), v.end());
    std::vector<SpectrumPeak> peaks;
    for (int i = 1; i + 1 < n; ++i) {
        if (v[i] < threshold * vmax) continue;
        if (!(v[i] >= v[i - 1] && v[i] > v[i + 1])) continue;
        // Suppress ripples: must dominate its band window.
        bool is_max = true;
        for (int j = i - 1; j >= 0 && w[i] - w[j] < band_width / 2; --j)
            if (v[j] > v[i]) { is_max = false; break; }
        for (int j = i + 1; j < n && w[j] - w[i] < band_width / 2; ++j)
            if (v[j] > v[i]) { is_max = false; break; }
        if (!is_max) continue;
        SpectrumPeak p;
        p.omega = w[i];
        p.height = v[i];
        const double dw = w[1] - w[0];
        for (int j = 0; j < n; ++j)
            if (std::abs(w[j] - w[i]) <= band_width / 2) p.area += v[j] * dw;
        peaks.push_back(p);
    }
    return peaks;
}

double fit_poisson_parameter(const std::vector<double>& band_areas) {
    if (band_areas.empty())
        throw ConfigurationError("no band areas to fit");
    double total = 0.0;
    for (double a : band_areas) total += a;
    if (!(total > 0.0))
        throw ConfigurationError("band areas must have positive total weight");
    std::vector<double> p(band_areas.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = band_areas[i] / total;

    const auto cost = [&](double lam) {
        double c = 0.0, logfac = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (k > 0) logfac += std::log(static_cast<double>(k));
            const double model = std::exp(-lam + k * std::log(lam) - logfac);
            c += (model - p[k]) * (model - p[k]);
        }
        return c;
    };
    // Golden-section search on a bracket generous for any physical S.
    double a = 1e-3, b = 30.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = cost(x1), f2 = cost(x2);
    for (int it = 0; it < 200; ++it) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gr * (b - a);
            f1 = cost(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gr * (b - a);
            f2 = cost(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace mdav
