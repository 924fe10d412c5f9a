#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "vibtomo/modal/transient.hpp"
#include "vibtomo/observation/sampling.hpp"

namespace vibtomo::obs {

/// Image-space motion: T frames of stacked per-vertex pixel displacements (T x 2q).
struct ImageSeries {
    Eigen::MatrixXd frames;
    double fps = 0.0;

    int frame_count() const { return static_cast<int>(frames.rows()); }
    int channel_count() const { return static_cast<int>(frames.cols()); }
};

/// frames * P^T.
ImageSeries sample_series(const modal::DisplacementSeries& series, const fem::SparseMatrix& P);

enum class Window { None, Hann };

/// One-sided spectrum over bins l = 1 .. floor(T/2); row r of `coeffs` and
/// entry r of `freqs` / `power` belong to bin r + 1.
///
/// power_l = sum_d c_l |X_ld|^2 / T^2 with c_l = 2, except c = 1 at the
/// Nyquist bin of even T. Without a window the total power therefore equals
/// the summed (population) temporal variance of all channels.
struct Spectrum {
    Eigen::VectorXd freqs;
    Eigen::MatrixXcd coeffs;
    Eigen::VectorXd power;
    double fps = 0.0;
    int frames = 0;

    int bin_count() const { return static_cast<int>(freqs.size()); }
    double bin_width() const { return fps / frames; }
    double freq_of_bin(int bin) const { return fps * bin / frames; }
};

/// Throws ValidationError when T < 4.
Spectrum power_spectrum(const ImageSeries& series, Window window = Window::None);

}  // namespace vibtomo::obs
