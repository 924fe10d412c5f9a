#pragma once

#include "vibtomo/observation/spectrum.hpp"

namespace vibtomo::obs {

struct DampingFit {
    double zeta = 0.0;
    double f0_hz = 0.0;
    double amplitude = 0.0;
    int window_lo = 0;  // first bin used
    int window_hi = 0;  // last bin used
    double rms_residual = 0.0;  // relative to the peak power
};

/// Least-squares fit of L(f) = a / ((f^2 - f0^2)^2 + (2 zeta f0 f)^2) to the
/// power around `bin`. The window grows from the peak while power stays above
/// 1e-3 of the peak and keeps falling (at most 64 bins per side). L depends on
/// zeta^2 only, so |zeta| is reported. A peak whose neighbours are below
/// 1e-10 of it has no measurable width and yields zeta = 0.
///
/// Throws ValidationError when the peak lacks 2 bins on either side and
/// FitQualityError when the fit does not converge or leaves the window.
DampingFit estimate_damping_ratio(const Spectrum& spectrum, int bin);

}  // namespace vibtomo::obs
