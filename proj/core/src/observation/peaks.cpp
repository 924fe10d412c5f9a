#include "vibtomo/observation/peaks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "vibtomo/error.hpp"

namespace vibtomo::obs {

std::vector<double> peak_prominences(const Eigen::VectorXd& values) {
    const int n = static_cast<int>(values.size());
    std::vector<double> prom(n, -1.0);
    int i = 1;
    while (i < n - 1) {
        if (values[i] > values[i - 1]) {
            int j = i;
            while (j + 1 < n && values[j + 1] == values[i]) ++j;
            if (j + 1 < n && values[j + 1] < values[i]) {
                const int peak = (i + j) / 2;
                const double h = values[peak];
                double left_min = h;
                for (int k = i - 1; k >= 0 && values[k] <= h; --k) left_min = std::min(left_min, values[k]);
                double right_min = h;
                for (int k = j + 1; k < n && values[k] <= h; ++k) right_min = std::min(right_min, values[k]);
                prom[peak] = h - std::max(left_min, right_min);
            }
            i = j + 1;
        } else {
            ++i;
        }
    }
    return prom;
}

std::vector<int> find_peaks(const Spectrum& spectrum, const PeakOptions& options) {
    if (spectrum.bin_count() == 0) throw ValidationError("spectrum is empty");
    if (options.min_separation < 1) throw ValidationError("min_separation must be >= 1");

    const double top = spectrum.power.maxCoeff();
    if (!(top > 0.0)) return {};
    const double floor = top * options.floor_rel;
    const Eigen::VectorXd logp =
        spectrum.power.unaryExpr([floor](double p) { return std::log(std::max(p, floor)); });
    const std::vector<double> prom = peak_prominences(logp);

    std::vector<int> candidates;
    for (int i = 0; i < static_cast<int>(prom.size()); ++i)
        if (prom[i] >= options.min_prominence) candidates.push_back(i);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](int a, int b) { return prom[a] > prom[b]; });

    std::vector<int> kept;
    for (int c : candidates) {
        if (options.max_peaks > 0 && static_cast<int>(kept.size()) >= options.max_peaks) break;
        const bool clear = std::all_of(kept.begin(), kept.end(), [&](int k) {
            return std::abs(k - c) >= options.min_separation;
        });
        if (clear) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end());
    for (int& k : kept) k += 1;
    return kept;
}

}  // namespace vibtomo::obs
