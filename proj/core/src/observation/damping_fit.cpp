#include "vibtomo/observation/damping_fit.hpp"

#include <cmath>

#include <unsupported/Eigen/NonLinearOptimization>

#include "vibtomo/error.hpp"

namespace vibtomo::obs {
namespace {

// Frequencies are scaled by the peak frequency and powers by the peak power;
// zeta is invariant under both scalings. Parameters x = (a, f0, zeta).
struct LorentzianResidual {
    Eigen::VectorXd f;
    Eigen::VectorXd p;

    int inputs() const { return 3; }
    int values() const { return static_cast<int>(f.size()); }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
        for (int i = 0; i < values(); ++i) {
            const double d = f[i] * f[i] - x[1] * x[1];
            const double c = 2.0 * x[2] * x[1] * f[i];
            r[i] = x[0] / (d * d + c * c) - p[i];
        }
        return 0;
    }

    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& J) const {
        for (int i = 0; i < values(); ++i) {
            const double fi = f[i];
            const double d = fi * fi - x[1] * x[1];
            const double c = 2.0 * x[2] * x[1] * fi;
            const double den = d * d + c * c;
            const double g = -x[0] / (den * den);
            J(i, 0) = 1.0 / den;
            // d(den)/d f0 = 2 d (-2 f0) + 2 c (2 zeta f)
            J(i, 1) = g * (-4.0 * d * x[1] + 4.0 * c * x[2] * fi);
            J(i, 2) = g * (4.0 * c * x[1] * fi);
        }
        return 0;
    }
};

}  // namespace

DampingFit estimate_damping_ratio(const Spectrum& spectrum, int bin) {
    const int L = spectrum.bin_count();
    const int i0 = bin - 1;
    if (i0 < 2 || i0 > L - 3)
        throw ValidationError("damping fit needs 2 bins of support on each side of the peak");
    const Eigen::VectorXd& P = spectrum.power;
    const double peak = P[i0];
    if (!(peak > 0.0)) throw FitQualityError("peak has no power");

    DampingFit out;
    out.f0_hz = spectrum.freqs[i0];
    if (P[i0 - 1] < 1e-10 * peak && P[i0 + 1] < 1e-10 * peak) {
        out.amplitude = peak;
        out.window_lo = out.window_hi = bin;
        return out;
    }

    constexpr int max_side = 64;
    int lo = i0, hi = i0;
    while (lo > 0 && i0 - lo < max_side && (i0 - lo < 2 || (P[lo - 1] < P[lo] && P[lo - 1] > 1e-3 * peak)))
        --lo;
    while (hi < L - 1 && hi - i0 < max_side &&
           (hi - i0 < 2 || (P[hi + 1] < P[hi] && P[hi + 1] > 1e-3 * peak)))
        ++hi;

    const double fs = spectrum.freqs[i0];
    LorentzianResidual fn;
    fn.f = spectrum.freqs.segment(lo, hi - lo + 1) / fs;
    fn.p = P.segment(lo, hi - lo + 1) / peak;

    // Initial width from the half-power crossing nearest the peak.
    int half = 1;
    while (i0 - half > lo && i0 + half < hi && P[i0 - half] > 0.5 * peak && P[i0 + half] > 0.5 * peak)
        ++half;
    double zeta0 = std::max(0.5 * half * spectrum.bin_width() / fs, 1e-4);
    Eigen::VectorXd x(3);
    x << std::pow(2.0 * zeta0, 2), 1.0, zeta0;

    Eigen::LevenbergMarquardt<LorentzianResidual> lm(fn);
    lm.parameters.maxfev = 2000;
    lm.parameters.xtol = 1e-12;
    lm.parameters.ftol = 1e-14;
    const auto status = lm.minimize(x);
    if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
        status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation || !x.allFinite())
        throw FitQualityError("Lorentzian fit did not converge");

    const double f0 = std::abs(x[1]) * fs;
    if (f0 < spectrum.freqs[lo] || f0 > spectrum.freqs[hi])
        throw FitQualityError("Lorentzian fit centre left the fit window");

    Eigen::VectorXd r(fn.values());
    fn(x, r);
    out.zeta = std::abs(x[2]);
    out.f0_hz = f0;
    out.amplitude = x[0] * peak * std::pow(fs, 4);
    out.window_lo = lo + 1;
    out.window_hi = hi + 1;
    out.rms_residual = std::sqrt(r.squaredNorm() / r.size());
    return out;
}

}  // namespace vibtomo::obs
