#include "vibtomo/observation/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "vibtomo/error.hpp"

namespace vibtomo::obs {

double ObservedMode::frequency_hz() const { return omega / (2.0 * std::numbers::pi); }

void normalize_gamma(Eigen::VectorXd& gamma) {
    const double nrm = gamma.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericalError("cannot normalize a zero mode vector");
    gamma /= nrm;
    const double cut = 1e-8 * gamma.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < gamma.size(); ++i) {
        if (std::abs(gamma[i]) > cut) {
            if (gamma[i] < 0.0) gamma = -gamma;
            return;
        }
    }
}

double energy_phase(const Eigen::VectorXcd& c) {
    const Eigen::VectorXd a = c.real();
    const Eigen::VectorXd b = c.imag();
    return 0.5 * std::atan2(2.0 * a.dot(b), a.squaredNorm() - b.squaredNorm());
}

std::vector<ObservedMode> extract_modes(const Spectrum& spectrum, const std::vector<int>& peaks,
                                        const SamplingOperator& sampler) {
    if (spectrum.coeffs.cols() != sampler.rows())
        throw ShapeError("spectrum channel count does not match 2q");
    const Eigen::VectorXd mask = sampler.visible_row_mask();
    std::vector<ObservedMode> out;
    out.reserve(peaks.size());
    for (int bin : peaks) {
        if (bin < 1 || bin > spectrum.bin_count())
            throw ValidationError("peak bin " + std::to_string(bin) + " is DC or beyond Nyquist");
        const Eigen::VectorXcd c = spectrum.coeffs.row(bin - 1).transpose();
        const double theta = energy_phase(c);
        ObservedMode m;
        m.gamma = (c.real() * std::cos(theta) + c.imag() * std::sin(theta)).cwiseProduct(mask);
        normalize_gamma(m.gamma);
        m.omega = 2.0 * std::numbers::pi * spectrum.freq_of_bin(bin);
        m.bin = bin;
        m.power = spectrum.power[bin - 1];
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<ObservedMode> merge_mode_lists(const std::vector<std::vector<ObservedMode>>& lists,
                                           double tol_hz) {
    struct Tagged {
        const ObservedMode* mode;
        std::size_t list;
    };
    std::vector<Tagged> all;
    for (std::size_t l = 0; l < lists.size(); ++l)
        for (const auto& m : lists[l]) all.push_back({&m, l});
    std::stable_sort(all.begin(), all.end(),
                     [](const Tagged& a, const Tagged& b) { return a.mode->omega < b.mode->omega; });

    std::vector<std::vector<Tagged>> clusters;
    for (const Tagged& t : all) {
        if (!clusters.empty()) {
            auto& cl = clusters.back();
            const double f0 = cl.front().mode->frequency_hz();
            const bool same_list = std::any_of(cl.begin(), cl.end(),
                                               [&](const Tagged& o) { return o.list == t.list; });
            if (!same_list && t.mode->frequency_hz() - f0 <= tol_hz) {
                cl.push_back(t);
                continue;
            }
        }
        clusters.push_back({t});
    }

    std::vector<ObservedMode> out;
    out.reserve(clusters.size());
    for (const auto& cl : clusters) {
        const Tagged& lead = *std::max_element(cl.begin(), cl.end(), [](const Tagged& a, const Tagged& b) {
            return a.mode->power < b.mode->power;
        });
        ObservedMode m = *lead.mode;
        if (cl.size() > 1) {
            Eigen::VectorXd sum = Eigen::VectorXd::Zero(m.gamma.size());
            for (const Tagged& t : cl) {
                if (t.mode->gamma.size() != sum.size()) throw ShapeError("merged modes differ in length");
                sum += (t.mode->gamma.dot(lead.mode->gamma) < 0.0 ? -1.0 : 1.0) * t.mode->gamma;
            }
            m.gamma = sum;
            normalize_gamma(m.gamma);
        }
        out.push_back(std::move(m));
    }
    return out;
}

void add_gamma_noise(std::vector<ObservedMode>& modes, const Eigen::VectorXd& visible_mask,
                     double snr, std::uint64_t seed) {
    if (!(snr > 0.0)) throw ValidationError("snr must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double visible = visible_mask.sum();
    if (!(visible > 0.0)) throw ValidationError("noise mask has no visible rows");
    for (auto& m : modes) {
        if (m.gamma.size() != visible_mask.size()) throw ShapeError("noise mask length mismatch");
        const double rms = std::sqrt(m.gamma.cwiseProduct(visible_mask).squaredNorm() / visible);
        const double sigma = rms / snr;
        for (Eigen::Index i = 0; i < m.gamma.size(); ++i)
            if (visible_mask[i] != 0.0) m.gamma[i] += sigma * normal(rng);
        normalize_gamma(m.gamma);
    }
}

std::vector<ObservedMode> observe_modes(const modal::ModalBasis& basis, const fem::SparseMatrix& S,
                                        int count) {
    if (S.cols() != basis.dof_count()) throw ShapeError("operator columns do not match basis DOFs");
    if (count < 0 || count > basis.count()) throw ValidationError("requested more modes than available");
    std::vector<ObservedMode> out;
    for (int i = 0; i < count; ++i) {
        ObservedMode m;
        m.gamma = S * basis.modes.col(i);
        normalize_gamma(m.gamma);
        m.omega = std::sqrt(std::max(basis.eigenvalues[i], 0.0));
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace vibtomo::obs
