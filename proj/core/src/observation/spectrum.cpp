#include "vibtomo/observation/spectrum.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "vibtomo/error.hpp"
#include "vibtomo/parallel.hpp"

namespace vibtomo::obs {

ImageSeries sample_series(const modal::DisplacementSeries& series, const fem::SparseMatrix& P) {
    if (P.cols() != series.dof_count())
        throw ShapeError("sampling operator columns do not match series DOF count");
    ImageSeries out;
    out.fps = series.fps;
    out.frames = series.frames * P.transpose();
    return out;
}

Spectrum power_spectrum(const ImageSeries& series, Window window) {
    const int T = series.frame_count();
    const int D = series.channel_count();
    if (T < 4) throw ValidationError("power spectrum needs at least 4 frames");
    if (series.fps <= 0.0) throw ValidationError("fps must be positive");

    const int L = T / 2;
    Spectrum s;
    s.fps = series.fps;
    s.frames = T;
    s.freqs.resize(L);
    for (int l = 0; l < L; ++l) s.freqs[l] = s.freq_of_bin(l + 1);
    s.coeffs.resize(L, D);

    Eigen::VectorXd taper = Eigen::VectorXd::Ones(T);
    if (window == Window::Hann)
        for (int t = 0; t < T; ++t)
            taper[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * t / T);

    parallel_for(static_cast<std::size_t>(D), [&](std::size_t d) {
        Eigen::FFT<double> fft;
        std::vector<double> x(T);
        for (int t = 0; t < T; ++t) x[t] = series.frames(t, d) * taper[t];
        std::vector<std::complex<double>> X;
        fft.fwd(X, x);
        for (int l = 0; l < L; ++l) s.coeffs(l, d) = X[l + 1];
    });

    s.power.resize(L);
    const double norm = 1.0 / (static_cast<double>(T) * T);
    for (int l = 0; l < L; ++l) {
        const bool nyquist = (T % 2 == 0) && (l + 1 == L);
        s.power[l] = (nyquist ? 1.0 : 2.0) * norm * s.coeffs.row(l).squaredNorm();
    }
    return s;
}

}  // namespace vibtomo::obs
