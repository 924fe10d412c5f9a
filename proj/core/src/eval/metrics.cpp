#include "vibtomo/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vibtomo/error.hpp"
#include "vibtomo/parallel.hpp"

namespace vibtomo::eval {

double normalized_correlation(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
    if (est.size() != truth.size()) throw ShapeError("correlation fields differ in length");
    if (est.size() < 2) throw ValidationError("correlation needs at least two values");
    const Eigen::ArrayXd a = est.array() - est.mean();
    const Eigen::ArrayXd b = truth.array() - truth.mean();
    const double na = std::sqrt((a * a).sum());
    const double nb = std::sqrt((b * b).sum());
    // Relative cutoff so rounding noise in a constant field is still "constant".
    const auto flat = [](double n, const Eigen::VectorXd& x) {
        return !(n > 1e-14 * std::sqrt(static_cast<double>(x.size())) * x.cwiseAbs().maxCoeff());
    };
    if (flat(na, est) || flat(nb, truth)) throw ValidationError("correlation is undefined for a constant field");
    return std::clamp((a * b).sum() / (na * nb), -1.0, 1.0);
}

namespace {

int mirror(int i, int n) {
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

}  // namespace

Eigen::VectorXd gaussian_blur(const Eigen::VectorXd& field, const fem::VoxelGrid& grid, double sigma) {
    if (field.size() != grid.size()) throw ShapeError("field length does not match grid");
    if (!(sigma >= 0.0)) throw ValidationError("blur sigma must be >= 0");
    if (sigma == 0.0) return field;

    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) sum += kernel[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    for (double& k : kernel) k /= sum;

    Eigen::VectorXd cur = field, next(field.size());
    for (int axis = 0; axis < 3; ++axis) {
        const int n = grid.dims()[axis];
        if (n == 1) continue;
        for (int idx = 0; idx < grid.size(); ++idx) {
            auto c = grid.coords(idx);
            const int base = c[axis];
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                c[axis] = mirror(base + t, n);
                acc += kernel[t + radius] * cur[grid.index(c[0], c[1], c[2])];
            }
            next[idx] = acc;
        }
        std::swap(cur, next);
    }
    return cur;
}

ResolutionCurve intrinsic_resolution(const Eigen::VectorXd& est, const Eigen::VectorXd& truth,
                                     const fem::VoxelGrid& grid, const std::vector<double>& sigmas) {
    if (sigmas.empty()) throw ValidationError("sigma sweep is empty");
    if (!std::is_sorted(sigmas.begin(), sigmas.end())) throw ValidationError("sigma sweep must be ascending");
    ResolutionCurve curve;
    curve.sigmas = sigmas;
    curve.correlations.resize(sigmas.size());
    parallel_for(sigmas.size(), [&](std::size_t i) {
        curve.correlations[i] = normalized_correlation(est, gaussian_blur(truth, grid, sigmas[i]));
    });
    const auto best = std::max_element(curve.correlations.begin(), curve.correlations.end());
    curve.sigma_star = sigmas[best - curve.correlations.begin()];
    return curve;
}

double FrequencyComparison::mean_relative_error() const {
    if (pairs.empty()) return 0.0;
    double s = 0.0;
    for (const auto& p : pairs) s += p.relative_error;
    return s / pairs.size();
}

FrequencyComparison compare_frequencies(const fem::MaterialField& estimate, const fem::UnitMatrixSet& units,
                                        const std::vector<double>& reference_hz, int count,
                                        const Eigen::MatrixXd* gammas, const fem::SparseMatrix* sampler) {
    const int r = static_cast<int>(reference_hz.size());
    if (count < r) throw ValidationError("predicted mode count must cover the reference list");
    if (gammas && (!sampler || gammas->cols() != r || gammas->rows() != sampler->rows()))
        throw ShapeError("reference gammas do not match the reference frequencies or sampler");

    const fem::GlobalSystem sys = fem::assemble_global(units, estimate);
    const modal::ModalBasis basis = modal::solve_modes(sys, std::min(count, sys.size()));
    const Eigen::VectorXd pred = basis.frequencies_hz();

    std::vector<int> order(r);
    for (int i = 0; i < r; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return reference_hz[a] < reference_hz[b]; });

    FrequencyComparison out;
    std::vector<char> used(pred.size(), 0);
    for (int ref : order) {
        int best = -1;
        for (int j = 0; j < pred.size(); ++j)
            if (!used[j] && (best < 0 || std::abs(pred[j] - reference_hz[ref]) < std::abs(pred[best] - reference_hz[ref])))
                best = j;
        if (best < 0) break;
        used[best] = 1;
        const double f = reference_hz[ref];
        out.pairs.push_back({f, pred[best], std::abs(pred[best] - f) / std::abs(f), best});
        if (gammas) {
            const Eigen::VectorXd g = *sampler * basis.modes.col(best);
            const Eigen::VectorXd h = gammas->col(ref);
            const double denom = g.norm() * h.norm();
            out.mode_similarity.push_back(denom > 0.0 ? std::abs(g.dot(h)) / denom : 0.0);
        }
    }
    return out;
}

nlohmann::json report_to_json(const ReconReport& r) {
    nlohmann::json doc = {{"corr_w", r.corr_w},
                          {"corr_v", r.corr_v},
                          {"sigma_star", r.resolution_w.sigma_star},
                          {"sigma_curve", {{"sigmas", r.resolution_w.sigmas}, {"correlations", r.resolution_w.correlations}}}};
    if (r.frequencies) {
        nlohmann::json table = nlohmann::json::array();
        for (const auto& p : r.frequencies->pairs)
            table.push_back({{"true_hz", p.reference_hz}, {"predicted_hz", p.predicted_hz}, {"relative_error", p.relative_error}});
        doc["freq_table"] = std::move(table);
        doc["mode_similarity"] = r.frequencies->mode_similarity;
        doc["mean_relative_error"] = r.frequencies->mean_relative_error();
    }
    return doc;
}

std::string resolution_csv(const ResolutionCurve& curve) {
    std::ostringstream out;
    out.precision(17);
    out << "sigma,correlation\n";
    for (std::size_t i = 0; i < curve.sigmas.size(); ++i) out << curve.sigmas[i] << ',' << curve.correlations[i] << '\n';
    return out.str();
}

std::string frequency_csv(const FrequencyComparison& cmp) {
    std::ostringstream out;
    out.precision(17);
    out << "reference_hz,predicted_hz,relative_error,similarity\n";
    for (std::size_t i = 0; i < cmp.pairs.size(); ++i) {
        const auto& p = cmp.pairs[i];
        out << p.reference_hz << ',' << p.predicted_hz << ',' << p.relative_error << ',';
        if (i < cmp.mode_similarity.size()) out << cmp.mode_similarity[i];
        out << '\n';
    }
    return out.str();
}

bool VoxelBox::overlaps(const VoxelBox& o) const {
    for (int a = 0; a < 3; ++a)
        if (hi[a] < o.lo[a] || o.hi[a] < lo[a]) return false;
    return true;
}

VoxelBox bright_region(const Eigen::VectorXd& field, const fem::VoxelGrid& grid, double quantile) {
    if (field.size() != grid.size()) throw ShapeError("field length does not match grid");
    if (!(quantile >= 0.0 && quantile <= 1.0)) throw ValidationError("quantile must lie in [0, 1]");
    std::vector<double> sorted(field.data(), field.data() + field.size());
    std::sort(sorted.begin(), sorted.end());
    const auto pos = static_cast<std::size_t>(std::floor(quantile * (sorted.size() - 1)));
    const double cut = sorted[pos];
    VoxelBox box{{grid.nx(), grid.ny(), grid.nz()}, {-1, -1, -1}};
    for (int e = 0; e < grid.size(); ++e) {
        if (field[e] < cut) continue;
        const auto c = grid.coords(e);
        for (int a = 0; a < 3; ++a) {
            box.lo[a] = std::min(box.lo[a], c[a]);
            box.hi[a] = std::max(box.hi[a], c[a]);
        }
    }
    return box;
}

}  // namespace vibtomo::eval
