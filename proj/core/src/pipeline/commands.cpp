#include "vibtomo/pipeline/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vibtomo/error.hpp"
#include "vibtomo/eval/metrics.hpp"
#include "vibtomo/fem/mesh_io.hpp"
#include "vibtomo/inverse/solver.hpp"
#include "vibtomo/modal/series_io.hpp"
#include "vibtomo/observation/damping_fit.hpp"
#include "vibtomo/observation/sampling.hpp"
#include "vibtomo/pipeline/volume.hpp"

namespace vibtomo::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    out << text;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(1) + "\n"); }

std::string fmt(double x) {
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

VolumeFile make_volume(const fem::VoxelGrid& grid, std::string name, std::string units, Eigen::VectorXd values) {
    return {grid, std::move(name), std::move(units), std::move(values)};
}

obs::SamplingOperator sampler_for(const fem::Mesh& mesh, const obs::ObservationSet& set) {
    if (set.q != mesh.vertex_count())
        throw ShapeError("observations have q = " + std::to_string(set.q) + " but the mesh has " +
                         std::to_string(mesh.vertex_count()) + " vertices");
    return obs::build_sampling_operator(mesh, set.projection, set.visible_vertices);
}

}  // namespace

double trend_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ShapeError("trend_slope: length mismatch");
    if (x.size() < 2) return 0.0;
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

void cmd_synth(const ExperimentSpec& spec, const fs::path& out_dir, bool write_series, std::ostream& log) {
    const auto result = synthesize(spec, write_series);
    ensure_dir(out_dir);
    const auto inference_grid = spec.inference_grid();

    fem::write_mesh(result.inference_mesh, out_dir / "mesh.json");
    fem::write_mesh(result.forward_mesh, out_dir / "forward_mesh.json");
    write_volume(make_volume(inference_grid, "youngs_modulus", "Pa", result.truth_w), out_dir / "truth_w.json");
    write_volume(make_volume(inference_grid, "density", "kg/m^3", result.truth_v), out_dir / "truth_v.json");
    write_volume(make_volume(spec.grid, "youngs_modulus", "Pa", result.truth.w), out_dir / "truth_forward_w.json");
    write_volume(make_volume(spec.grid, "density", "kg/m^3", result.truth.v), out_dir / "truth_forward_v.json");
    obs::write_observations(result.observations, out_dir / "observations.json");
    write_json(out_dir / "inversion.json", inv::config_to_json(spec.inversion));

    std::string csv = "index,frequency_hz\n";
    const Eigen::VectorXd f = result.forward_basis.frequencies_hz();
    for (int i = 0; i < f.size(); ++i) csv += std::to_string(i) + "," + fmt(f[i]) + "\n";
    write_text(out_dir / "forward_modes.csv", csv);

    for (std::size_t i = 0; i < result.series.size(); ++i)
        modal::write_series(result.series[i], out_dir / ("series_" + std::to_string(i) + ".bin"),
                            "forward_mesh.json");

    log << "forward modes: " << result.forward_basis.count() << "\n";
    for (std::size_t i = 0; i < result.peaks_per_pluck.size(); ++i)
        log << "pluck " << i << ": " << result.peaks_per_pluck[i] << " peaks\n";
    log << "observed modes: " << result.observations.modes.size() << " on "
        << result.observations.visible_vertices.size() << " of " << result.observations.q << " vertices\n";
    log << "wrote " << out_dir.string() << "\n";
}

int cmd_invert(const InvertOptions& options, std::ostream& log) {
    auto set = obs::read_observations(options.observations);
    const auto mesh = fem::read_mesh(options.mesh);
    if (options.freq_ceiling_hz) set.truncate_above(*options.freq_ceiling_hz);
    if (options.max_modes > 0 && static_cast<int>(set.modes.size()) > options.max_modes)
        set.modes.resize(options.max_modes);
    options.config.validate();

    const auto sampler = sampler_for(mesh, set);
    const auto units = fem::assemble_unit_matrices(mesh, options.config.nu);
    const auto problem = inv::make_problem(units, mesh.grid(), sampler.P, set.modes, options.config);
    log << "inverting " << problem.modes() << " modes over " << problem.voxels() << " voxels\n";
    const auto result = inv::run_inversion(problem, options.config);

    ensure_dir(options.out_dir);
    write_volume(make_volume(mesh.grid(), "youngs_modulus", "Pa", result.field.w), options.out_dir / "w.json");
    write_volume(make_volume(mesh.grid(), "density", "kg/m^3", result.field.v), options.out_dir / "v.json");
    write_json(options.out_dir / "state.json", inv::result_to_json(result));

    log << "iterations: " << result.state.iter << (result.state.converged ? " (converged)" : " (max_iters reached)")
        << "\n";
    if (!result.state.objective_history.empty())
        log << "objective: " << result.state.objective_history.back() << "\n";
    return result.state.converged ? 0 : 3;
}

void cmd_eval(const EvalOptions& options, std::ostream& log) {
    const auto est_w = read_volume(options.est_w), est_v = read_volume(options.est_v);
    const auto truth_w = read_volume(options.truth_w), truth_v = read_volume(options.truth_v);
    for (const auto* vol : {&est_v, &truth_w, &truth_v})
        if (!(vol->grid == est_w.grid))
            throw ShapeError("volume '" + vol->name + "' does not share the grid of the w estimate");
    const auto& grid = est_w.grid;

    eval::ReconReport report;
    report.corr_w = eval::normalized_correlation(est_w.values, truth_w.values);
    report.corr_v = eval::normalized_correlation(est_v.values, truth_v.values);
    report.resolution_w = eval::intrinsic_resolution(est_w.values, truth_w.values, grid, options.sigmas);

    if (options.mesh.has_value() != options.observations.has_value())
        throw ValidationError("frequency comparison needs both a mesh and an observations file");
    if (options.mesh) {
        const auto mesh = fem::read_mesh(*options.mesh);
        if (!(mesh.grid() == grid)) throw ShapeError("mesh grid does not match the volumes");
        const auto set = obs::read_observations(*options.observations);
        const auto sampler = sampler_for(mesh, set);
        const auto units = fem::assemble_unit_matrices(mesh, options.nu);
        std::vector<double> ref;
        Eigen::MatrixXd gammas(2 * set.q, static_cast<Eigen::Index>(set.modes.size()));
        for (std::size_t i = 0; i < set.modes.size(); ++i) {
            ref.push_back(set.modes[i].frequency_hz());
            gammas.col(static_cast<Eigen::Index>(i)) = set.modes[i].gamma;
        }
        if (!ref.empty()) {
            fem::MaterialField field{est_w.values, est_v.values, options.nu};
            const int count = std::min(units.dof_count(), static_cast<int>(ref.size()) + 5);
            report.frequencies = eval::compare_frequencies(field, units, ref, count, &gammas, &sampler.P);
        }
    }

    ensure_dir(options.out_dir);
    json doc = eval::report_to_json(report);
    const auto box_est = eval::bright_region(est_w.values, grid);
    const auto box_truth = eval::bright_region(truth_w.values, grid);
    doc["bright_region_w"] = {{"estimate", {{"lo", box_est.lo}, {"hi", box_est.hi}}},
                              {"truth", {{"lo", box_truth.lo}, {"hi", box_truth.hi}}},
                              {"overlap", box_est.overlaps(box_truth)}};
    write_json(options.out_dir / "report.json", doc);
    write_text(options.out_dir / "resolution.csv", eval::resolution_csv(report.resolution_w));
    if (report.frequencies) write_text(options.out_dir / "frequencies.csv", eval::frequency_csv(*report.frequencies));

    if (options.heatmaps) {
        auto emit = [&](const VolumeFile& est, const VolumeFile& truth, const std::string& tag) {
            const double lo = std::min(est.values.minCoeff(), truth.values.minCoeff());
            const double hi = std::max(est.values.maxCoeff(), truth.values.maxCoeff());
            write_slice_heatmaps(options.out_dir / (tag + "_est"), est.values, grid, lo, hi, options.colormap,
                                 options.pixel_scale);
            write_slice_heatmaps(options.out_dir / (tag + "_truth"), truth.values, grid, lo, hi, options.colormap,
                                 options.pixel_scale);
        };
        emit(est_w, truth_w, "w");
        emit(est_v, truth_v, "v");
    }

    log << "corr_w " << report.corr_w << "  corr_v " << report.corr_v << "  sigma_star "
        << report.resolution_w.sigma_star << "\n";
    if (report.frequencies)
        log << "mean relative frequency error " << report.frequencies->mean_relative_error() << "\n";
}

void cmd_modes(const fs::path& mesh_path, const fs::path& w_path, const fs::path& v_path, int count,
               std::optional<double> freq_ceiling_hz, double nu, const fs::path& out_dir, std::ostream& log) {
    const auto mesh = fem::read_mesh(mesh_path);
    const auto w = read_volume(w_path), v = read_volume(v_path);
    if (!(w.grid == mesh.grid()) || !(v.grid == mesh.grid())) throw ShapeError("volumes do not match the mesh grid");
    if (count < 1) throw ValidationError("mode count must be at least 1");
    const auto units = fem::assemble_unit_matrices(mesh, nu);
    const auto system = fem::assemble_global(units, fem::MaterialField{w.values, v.values, nu});
    const auto basis = modal::solve_modes(system, std::min(count, system.size()), freq_ceiling_hz);

    ensure_dir(out_dir);
    const Eigen::VectorXd f = basis.frequencies_hz();
    std::string csv = "index,frequency_hz,eigenvalue\n";
    for (int i = 0; i < f.size(); ++i)
        csv += std::to_string(i) + "," + fmt(f[i]) + "," + fmt(basis.eigenvalues[i]) + "\n";
    write_text(out_dir / "modes.csv", csv);
    write_json(out_dir / "modes.json",
               {{"frequencies_hz", std::vector<double>(f.data(), f.data() + f.size())},
                {"eigenvalues",
                 std::vector<double>(basis.eigenvalues.data(), basis.eigenvalues.data() + basis.eigenvalues.size())}});
    log << basis.count() << " modes, " << (f.size() ? f[0] : 0.0) << " .. " << (f.size() ? f[f.size() - 1] : 0.0)
        << " Hz\n";
}

void cmd_damping(const fs::path& series_path, const fs::path& mesh_path, const fs::path& observations_path,
                 const obs::PeakOptions& peak_options, const fs::path& out_dir, std::ostream& log) {
    const auto series = modal::read_series(series_path);
    const auto mesh = fem::read_mesh(mesh_path);
    if (series.dof_count() != mesh.free_dof_count())
        throw ShapeError("series has " + std::to_string(series.dof_count()) + " values per frame, mesh has " +
                         std::to_string(mesh.free_dof_count()) + " free DOFs");
    const auto set = obs::read_observations(observations_path);
    const auto sampler = obs::build_sampling_operator(mesh, set.projection);
    const auto spectrum = obs::power_spectrum(obs::sample_series(series, sampler.P), obs::Window::None);
    const auto peaks = obs::find_peaks(spectrum, peak_options);

    json rows = json::array();
    std::string csv = "bin,frequency_hz,zeta,f0_hz,rms_residual\n";
    for (int bin : peaks) {
        try {
            const auto fit = obs::estimate_damping_ratio(spectrum, bin);
            rows.push_back({{"bin", bin},
                            {"frequency_hz", spectrum.freq_of_bin(bin)},
                            {"zeta", fit.zeta},
                            {"f0_hz", fit.f0_hz},
                            {"rms_residual", fit.rms_residual}});
            csv += std::to_string(bin) + "," + fmt(spectrum.freq_of_bin(bin)) + "," + fmt(fit.zeta) + "," +
                   fmt(fit.f0_hz) + "," + fmt(fit.rms_residual) + "\n";
        } catch (const Error& e) {
            rows.push_back({{"bin", bin}, {"frequency_hz", spectrum.freq_of_bin(bin)}, {"error", e.what()}});
            log << "peak at " << spectrum.freq_of_bin(bin) << " Hz: " << e.what() << "\n";
        }
    }
    ensure_dir(out_dir);
    write_text(out_dir / "damping.csv", csv);
    write_json(out_dir / "damping.json", {{"fits", rows}});
    log << peaks.size() << " peaks fitted\n";
}

void cmd_sweep(const ExperimentSpec& spec, std::vector<int> mode_counts, const std::vector<double>& sigmas,
               const fs::path& out_dir, std::ostream& log) {
    if (mode_counts.empty()) throw ValidationError("sweep needs at least one mode count");
    std::sort(mode_counts.begin(), mode_counts.end());
    mode_counts.erase(std::unique(mode_counts.begin(), mode_counts.end()), mode_counts.end());
    if (mode_counts.front() < 1) throw ValidationError("mode counts must be positive");

    const auto synth = synthesize(spec);
    const int available = static_cast<int>(synth.observations.modes.size());
    const auto grid = spec.inference_grid();
    const auto sampler = obs::build_sampling_operator(synth.inference_mesh, spec.camera,
                                                      synth.observations.visible_vertices);
    const auto units = fem::assemble_unit_matrices(synth.inference_mesh, spec.nu);

    std::vector<double> ks, corr_w, sigma_star;
    json rows = json::array();
    std::string csv = "modes,corr_w,corr_v,sigma_star,iterations,converged\n";
    for (int k : mode_counts) {
        if (k > available) {
            log << "skipping k = " << k << ": only " << available << " modes observed\n";
            continue;
        }
        std::vector<obs::ObservedMode> modes(synth.observations.modes.begin(), synth.observations.modes.begin() + k);
        const auto problem = inv::make_problem(units, grid, sampler.P, modes, spec.inversion);
        const auto result = inv::run_inversion(problem, spec.inversion);
        const double cw = eval::normalized_correlation(result.field.w, synth.truth_w);
        const double cv = eval::normalized_correlation(result.field.v, synth.truth_v);
        const auto curve = eval::intrinsic_resolution(result.field.w, synth.truth_w, grid, sigmas);
        ks.push_back(k);
        corr_w.push_back(cw);
        sigma_star.push_back(curve.sigma_star);
        rows.push_back({{"modes", k},
                        {"corr_w", cw},
                        {"corr_v", cv},
                        {"sigma_star", curve.sigma_star},
                        {"iterations", result.state.iter},
                        {"converged", result.state.converged}});
        csv += std::to_string(k) + "," + fmt(cw) + "," + fmt(cv) + "," + fmt(curve.sigma_star) + "," +
               std::to_string(result.state.iter) + "," + (result.state.converged ? "1" : "0") + "\n";
        log << "k = " << k << ": corr_w " << cw << ", corr_v " << cv << ", sigma_star " << curve.sigma_star << "\n";
    }
    if (ks.empty()) throw ValidationError("no requested mode count is available (" + std::to_string(available) + " observed)");

    const double slope_w = trend_slope(ks, corr_w), slope_s = trend_slope(ks, sigma_star);
    ensure_dir(out_dir);
    write_text(out_dir / "sweep.csv", csv);
    write_json(out_dir / "sweep.json", {{"rows", rows},
                                        {"corr_w_slope", slope_w},
                                        {"corr_w_non_decreasing_trend", slope_w >= 0.0},
                                        {"sigma_star_slope", slope_s},
                                        {"sigma_star_non_increasing_trend", slope_s <= 0.0}});
    log << "corr_w trend " << (slope_w >= 0.0 ? "non-decreasing" : "decreasing") << ", sigma_star trend "
        << (slope_s <= 0.0 ? "non-increasing" : "increasing") << "\n";
}

}  // namespace vibtomo::pipeline
