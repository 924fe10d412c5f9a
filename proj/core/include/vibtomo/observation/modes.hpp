#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "vibtomo/modal/eigensolver.hpp"
#include "vibtomo/observation/sampling.hpp"
#include "vibtomo/observation/spectrum.hpp"

namespace vibtomo::obs {

/// An image-space mode: unit-norm pixel displacement gamma (2q entries,
/// zero on unseen rows) at angular frequency omega [rad/s].
struct ObservedMode {
    Eigen::VectorXd gamma;
    double omega = 0.0;
    int bin = -1;  // -1 when not taken from a spectrum
    double power = 0.0;

    double frequency_hz() const;
};

/// Unit-normalizes in place and flips the sign so the first entry with
/// |x| > 1e-8 max|x| is positive. Throws NumericalError for a zero vector.
void normalize_gamma(Eigen::VectorXd& gamma);

/// Phase angle maximizing ||Re(c e^{-i theta})||: theta = atan2(2 a.b, |a|^2 - |b|^2) / 2
/// for c = a + i b.
double energy_phase(const Eigen::VectorXcd& c);

/// One mode per peak bin: the phase-rotated real part of the FFT coefficients,
/// masked to the visible rows of `sampler`, normalized and sign-fixed.
/// Throws ValidationError for a bin outside 1..floor(T/2) (in particular DC).
std::vector<ObservedMode> extract_modes(const Spectrum& spectrum, const std::vector<int>& peaks,
                                        const SamplingOperator& sampler);

/// Merges mode lists from several runs. Modes from different lists whose
/// frequencies differ by at most tol_hz are averaged after aligning their
/// signs with the strongest member; the strongest member's frequency and bin
/// are kept. Result is sorted by frequency.
std::vector<ObservedMode> merge_mode_lists(const std::vector<std::vector<ObservedMode>>& lists,
                                           double tol_hz);

/// Adds white Gaussian noise to the visible entries of every gamma with
/// standard deviation rms(visible entries) / snr, then renormalizes.
void add_gamma_noise(std::vector<ObservedMode>& modes, const Eigen::VectorXd& visible_mask,
                     double snr, std::uint64_t seed);

/// Noise-free observations straight from a modal basis: gamma = S u_i / ||S u_i||
/// for the first `count` modes, where S is a sampling or transfer operator.
std::vector<ObservedMode> observe_modes(const modal::ModalBasis& basis, const fem::SparseMatrix& S,
                                        int count);

}  // namespace vibtomo::obs
