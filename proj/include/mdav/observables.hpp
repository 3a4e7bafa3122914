#pragma once

#include "mdav/ensemble.hpp"
#include "mdav/model.hpp"

#include <vector>

namespace mdav {

// Values sampled on a strictly increasing, equidistant time grid.
template <typename T>
struct TimeSeries {
    std::vector<double> times;
    std::vector<T> values;

    std::size_t size() const { return times.size(); }
    void validate() const {
        if (times.size() != values.size())
            throw DimensionError("time series length mismatch");
        if (times.size() >= 2) {
            const double dt = times[1] - times[0];
            for (std::size_t i = 1; i < times.size(); ++i)
                if (std::abs((times[i] - times[i - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
                    throw ConfigurationError("time grid is not equidistant");
        }
    }
};

using RealSeries = TimeSeries<double>;
using ComplexSeries = TimeSeries<Complex>;

// <sigma_z> for a two-level system state.
double population_z(const EnsembleState& state);

// Diagonal of the exciton reduced density matrix, one entry per site in
// storage order.
RealVector exciton_density(const EnsembleState& state);

// <H> of the Ansatz state.
double energy(const EnsembleState& state, const ModelSpec& model);

// Overlap of the propagated state with the symmetric bright state at phonon
// vacuum, normalized so F(0) = 1 for the bright initial state.
Complex autocorrelation_value(const EnsembleState& state);

struct SpectrumOptions {
    double damping = 0.0;      // exponential window time constant; 0 -> T/5
    double omega_min = 0.0;    // 0,0 -> automatic range
    double omega_max = 0.0;
    double pad_factor = 8.0;   // frequency grid spacing 2 pi / (pad * T)
};

// F(omega) = (1/pi) Re Int_0^T F(t) w(t) e^{+i omega t} dt on an equidistant
// omega grid, normalized to unit integral.
RealSeries absorption_spectrum(const ComplexSeries& f, const SpectrumOptions& opts = {});

// Mean absolute deviation between two series on identical grids.
double error_measure(const RealSeries& reference, const RealSeries& candidate);

struct SpectrumPeak {
    double omega = 0.0;   // peak position
    double height = 0.0;
    double area = 0.0;    // integrated over the band window
};

// Local maxima of the spectrum above `threshold` times its global maximum,
// each with the band area over a window of width `band_width`.
std::vector<SpectrumPeak> find_peaks(const RealSeries& spectrum, double band_width,
                                     double threshold = 0.02);

// Least-squares fit of e^{-lam} lam^n / n! to normalized band areas.
double fit_poisson_parameter(const std::vector<double>& band_areas);

}  // namespace mdav
