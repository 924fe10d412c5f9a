#include "vibtomo/pipeline/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Geometry>

#include "vibtomo/error.hpp"
#include "vibtomo/observation/modes.hpp"
#include "vibtomo/observation/sampling.hpp"
#include "vibtomo/pipeline/volume.hpp"

namespace vibtomo::pipeline {

using nlohmann::json;

namespace {

// Reads doc[key] as T, turning any JSON error into a ValidationError that
// names the full path.
template <class T>
T read(const json& doc, const std::string& key, const std::string& path) {
    const std::string where = path.empty() ? key : path + "." + key;
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(where + ": " + e.what());
    }
}

template <class T>
T read_or(const json& doc, const std::string& key, const std::string& path, T fallback) {
    return doc.contains(key) && !doc.at(key).is_null() ? read<T>(doc, key, path) : fallback;
}

Eigen::Vector3d read_vec3(const json& doc, const std::string& key, const std::string& path) {
    auto a = read<std::array<double, 3>>(doc, key, path);
    return {a[0], a[1], a[2]};
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

obs::ProjectionModel read_camera(const json& doc, const std::string& path) {
    if (doc.contains("A")) {
        obs::ProjectionModel cam;
        auto A = read<std::array<std::array<double, 3>, 2>>(doc, "A", path);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 3; ++c) cam.A(r, c) = A[r][c];
        auto b = read_or<std::array<double, 2>>(doc, "b", path, {0.0, 0.0});
        cam.b = {b[0], b[1]};
        if (cam.rank() < 2) throw ValidationError(join(path, "A") + ": camera matrix must have rank 2");
        return cam;
    }
    const Eigen::Vector3d view = read_vec3(doc, "view", path);
    const Eigen::Vector3d up = doc.contains("up") ? read_vec3(doc, "up", path) : Eigen::Vector3d::UnitZ();
    const double ppm = read_or(doc, "pixels_per_meter", path, 1e4);
    if (view.norm() == 0.0) throw ValidationError(join(path, "view") + ": must be non-zero");
    if (up.cross(view).norm() < 1e-9 * up.norm() * view.norm())
        throw ValidationError(join(path, "up") + ": must not be parallel to the view direction");
    if (!(ppm > 0.0)) throw ValidationError(join(path, "pixels_per_meter") + ": must be positive");
    return obs::look_along(view.normalized(), up, ppm);
}

modal::RayleighDamping read_damping(const json& doc, const std::string& path) {
    if (doc.contains("ratios")) {
        const auto& r = doc.at("ratios");
        if (!r.is_array() || r.size() != 2)
            throw ValidationError(join(path, "ratios") + ": expected two {freq_hz, zeta} entries");
        modal::DampingPoint p[2];
        for (int i = 0; i < 2; ++i) {
            const std::string where = join(path, "ratios") + "[" + std::to_string(i) + "]";
            p[i] = {read<double>(r[i], "freq_hz", where), read<double>(r[i], "zeta", where)};
        }
        try {
            return modal::rayleigh_from_ratios(p[0], p[1]);
        } catch (const ValidationError& e) {
            throw ValidationError(join(path, "ratios") + ": " + e.what());
        }
    }
    modal::RayleighDamping d;
    d.alpha = read_or(doc, "alpha", path, 0.0);
    d.beta = read_or(doc, "beta", path, 0.0);
    if (d.alpha < 0.0 || d.beta < 0.0) throw ValidationError(path + ": alpha and beta must be non-negative");
    return d;
}

}  // namespace

fem::VoxelGrid ExperimentSpec::inference_grid() const {
    if (!inference_dims) return grid;
    const auto& d = *inference_dims;
    return fem::VoxelGrid(d, grid.spacing() * grid.nx() / d[0], grid.origin());
}

void ExperimentSpec::validate() const {
    if (object == ObjectKind::Drum && grid.nz() != 1) throw ValidationError("grid.dims: drums need nz = 1");
    if (!(nu >= 0.0 && nu < 0.5)) throw ValidationError("nu: must lie in [0, 0.5)");
    if (!(youngs > 0.0)) throw ValidationError("truth.youngs: must be positive");
    if (!(density > 0.0)) throw ValidationError("truth.density: must be positive");

    const Eigen::Vector3d lo = grid.origin(), hi = grid.origin() + grid.extent();
    const double tol = 1e-9 * grid.spacing();
    for (std::size_t i = 0; i < defects.size(); ++i) {
        const auto& d = defects[i];
        const std::string where = "truth.defects[" + std::to_string(i) + "]";
        if ((d.size.array() <= 0.0).any()) throw ValidationError(where + ".size: must be positive");
        if (!(d.youngs > 0.0) || !(d.density > 0.0))
            throw ValidationError(where + ": youngs and density must be positive");
        for (int a = 0; a < 3; ++a) {
            if (object == ObjectKind::Drum && a == 2) continue;
            if (d.corner[a] < lo[a] - tol || d.corner[a] + d.size[a] > hi[a] + tol)
                throw ValidationError(where + ": box lies outside the grid");
        }
    }

    if (!(fps > 0.0)) throw ValidationError("fps: must be positive");
    if (!(duration > 0.0)) throw ValidationError("duration: must be positive");
    if (static_cast<long>(std::lround(fps * duration)) < 4)
        throw ValidationError("duration: fewer than 4 frames at the given fps");
    if (freq_ceiling_hz) {
        if (!(*freq_ceiling_hz > 0.0)) throw ValidationError("freq_ceiling_hz: must be positive");
        if (!(fps > 2.0 * *freq_ceiling_hz)) throw ValidationError("fps: must exceed twice freq_ceiling_hz");
    }
    if (forward_modes < 1) throw ValidationError("forward_modes: must be at least 1");
    if (observed_modes < 0) throw ValidationError("observed_modes: must be non-negative");
    if (source == ObservationSource::Transient && plucks.empty())
        throw ValidationError("plucks: transient observations need at least one pluck");
    for (std::size_t i = 0; i < plucks.size(); ++i)
        if (plucks[i].displacement.norm() == 0.0)
            throw ValidationError("plucks[" + std::to_string(i) + "].displacement: must be non-zero");
    if (noise_snr && !(*noise_snr > 0.0)) throw ValidationError("noise.snr: must be positive");
    if (merge_tol_hz && !(*merge_tol_hz >= 0.0)) throw ValidationError("merge_tol_hz: must be non-negative");
    if (inference_dims) {
        const auto& d = *inference_dims;
        if (d[0] < 1 || d[1] < 1 || d[2] < 1) throw ValidationError("inference_grid.dims: must be positive");
        for (int a = 1; a < 3; ++a)
            if (std::abs(grid.extent()[a] / d[a] - grid.extent()[0] / d[0]) > 1e-9 * grid.spacing())
                throw ValidationError("inference_grid.dims: voxels must stay cubic over the same extent");
    }
    try {
        inversion.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("inversion: ") + e.what());
    }
}

ExperimentSpec experiment_from_json(const json& doc) {
    if (!doc.is_object()) throw ValidationError("experiment: expected a JSON object");
    ExperimentSpec spec;
    const std::string object = read_or<std::string>(doc, "object", "", "cube");
    if (object == "cube")
        spec.object = ObjectKind::Cube;
    else if (object == "drum")
        spec.object = ObjectKind::Drum;
    else
        throw ValidationError("object: expected cube or drum, got '" + object + "'");

    if (!doc.contains("grid")) throw ValidationError("grid: missing");
    {
        const auto& g = doc.at("grid");
        auto dims = read<std::array<int, 3>>(g, "dims", "grid");
        const double spacing = read<double>(g, "spacing", "grid");
        Eigen::Vector3d origin = g.contains("origin") ? read_vec3(g, "origin", "grid") : Eigen::Vector3d::Zero();
        if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) throw ValidationError("grid.dims: must be positive");
        if (!(spacing > 0.0)) throw ValidationError("grid.spacing: must be positive");
        spec.grid = fem::VoxelGrid(dims, spacing, origin);
    }
    try {
        spec.fixed_face = fem::cube_face_from_string(read_or<std::string>(doc, "fixed_face", "", "bottom"));
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("fixed_face: ") + e.what());
    }
    spec.boundary_fixed = read_or(doc, "boundary_fixed", "", true);
    spec.nu = read_or(doc, "nu", "", 0.3);

    if (doc.contains("truth")) {
        const auto& t = doc.at("truth");
        spec.youngs = read_or(t, "youngs", "truth", spec.youngs);
        spec.density = read_or(t, "density", "truth", spec.density);
        if (t.contains("defects")) {
            const auto& list = t.at("defects");
            if (!list.is_array()) throw ValidationError("truth.defects: expected an array");
            for (std::size_t i = 0; i < list.size(); ++i) {
                const std::string where = "truth.defects[" + std::to_string(i) + "]";
                BoxDefect d;
                d.corner = read_vec3(list[i], "corner", where);
                d.size = read_vec3(list[i], "size", where);
                d.youngs = read<double>(list[i], "youngs", where);
                d.density = read<double>(list[i], "density", where);
                spec.defects.push_back(d);
            }
        }
    }

    if (doc.contains("camera")) {
        const auto& c = doc.at("camera");
        spec.camera = read_camera(c, "camera");
        if (c.contains("visible") && !(c.at("visible").is_string() && c.at("visible") == "auto"))
            spec.visible_vertices = read<std::vector<int>>(c, "visible", "camera");
    } else {
        spec.camera = obs::look_along(Eigen::Vector3d(-1, 1, -1).normalized(), Eigen::Vector3d::UnitZ(), 1e4);
    }

    if (doc.contains("plucks")) {
        const auto& list = doc.at("plucks");
        if (!list.is_array()) throw ValidationError("plucks: expected an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string where = "plucks[" + std::to_string(i) + "]";
            spec.plucks.push_back({read_vec3(list[i], "position", where), read_vec3(list[i], "displacement", where)});
        }
    }
    if (doc.contains("damping")) spec.damping = read_damping(doc.at("damping"), "damping");

    spec.fps = read_or(doc, "fps", "", spec.fps);
    spec.duration = read_or(doc, "duration", "", spec.duration);
    if (doc.contains("freq_ceiling_hz") && !doc.at("freq_ceiling_hz").is_null())
        spec.freq_ceiling_hz = read<double>(doc, "freq_ceiling_hz", "");
    spec.forward_modes = read_or(doc, "forward_modes", "", spec.forward_modes);

    const std::string source = read_or<std::string>(doc, "observation_source", "", "transient");
    if (source == "transient")
        spec.source = ObservationSource::Transient;
    else if (source == "true_modes")
        spec.source = ObservationSource::TrueModes;
    else
        throw ValidationError("observation_source: expected transient or true_modes, got '" + source + "'");
    spec.observed_modes = read_or(doc, "observed_modes", "", 0);

    if (doc.contains("peaks")) {
        const auto& p = doc.at("peaks");
        spec.peaks.min_prominence = read_or(p, "min_prominence", "peaks", spec.peaks.min_prominence);
        spec.peaks.min_separation = read_or(p, "min_separation", "peaks", spec.peaks.min_separation);
        spec.peaks.max_peaks = read_or(p, "max_peaks", "peaks", spec.peaks.max_peaks);
        spec.peaks.floor_rel = read_or(p, "floor_rel", "peaks", spec.peaks.floor_rel);
        const std::string window = read_or<std::string>(p, "window", "peaks", "hann");
        if (window == "hann")
            spec.window = obs::Window::Hann;
        else if (window == "none")
            spec.window = obs::Window::None;
        else
            throw ValidationError("peaks.window: expected hann or none");
    }
    if (doc.contains("merge_tol_hz") && !doc.at("merge_tol_hz").is_null())
        spec.merge_tol_hz = read<double>(doc, "merge_tol_hz", "");

    if (doc.contains("noise") && !doc.at("noise").is_null()) {
        const auto& n = doc.at("noise");
        if (n.contains("snr") && !n.at("snr").is_null()) spec.noise_snr = read<double>(n, "snr", "noise");
        spec.seed = read_or<std::uint64_t>(n, "seed", "noise", spec.seed);
    }
    spec.seed = read_or<std::uint64_t>(doc, "seed", "", spec.seed);

    if (doc.contains("inference_grid") && !doc.at("inference_grid").is_null())
        spec.inference_dims = read<std::array<int, 3>>(doc.at("inference_grid"), "dims", "inference_grid");

    if (doc.contains("inversion")) {
        try {
            spec.inversion = inv::config_from_json(doc.at("inversion"));
        } catch (const ValidationError& e) {
            throw ValidationError(std::string("inversion: ") + e.what());
        }
    } else if (spec.object == ObjectKind::Drum) {
        spec.inversion = inv::InversionConfig::drum_defaults();
    }
    spec.inversion.nu = spec.nu;
    spec.output_dir = read_or<std::string>(doc, "output_dir", "", spec.output_dir.string());

    spec.validate();
    return spec;
}

ExperimentSpec read_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return experiment_from_json(doc);
}

fem::MaterialField truth_field(const ExperimentSpec& spec) {
    auto field = fem::MaterialField::homogeneous(spec.grid.size(), spec.youngs, spec.density, spec.nu);
    for (const auto& d : spec.defects) {
        for (int e = 0; e < spec.grid.size(); ++e) {
            const Eigen::Vector3d c = spec.grid.center(e);
            bool inside = true;
            for (int a = 0; a < 3 && inside; ++a) {
                if (spec.object == ObjectKind::Drum && a == 2) continue;
                inside = c[a] >= d.corner[a] && c[a] < d.corner[a] + d.size[a];
            }
            if (inside) {
                field.w[e] = d.youngs;
                field.v[e] = d.density;
            }
        }
    }
    return field;
}

fem::Mesh build_mesh(const ExperimentSpec& spec, const fem::VoxelGrid& grid) {
    return spec.object == ObjectKind::Cube ? fem::build_cube_mesh(grid, spec.fixed_face)
                                           : fem::build_membrane_mesh(grid, spec.boundary_fixed);
}

namespace {

int nearest_vertex(const fem::Mesh& mesh, const Eigen::Vector3d& p) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        if (mesh.is_fixed(v)) continue;
        const double d = (mesh.vertex(v) - p).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = v;
        }
    }
    if (best < 0) throw ValidationError("plucks: the mesh has no free vertex");
    return best;
}

}  // namespace

SynthesisResult synthesize(const ExperimentSpec& spec, bool keep_series) {
    spec.validate();
    const fem::VoxelGrid inference_grid = spec.inference_grid();
    SynthesisResult out{build_mesh(spec, spec.grid), build_mesh(spec, inference_grid), truth_field(spec), {}, {}, {},
                        {}, {}, {}};
    out.truth_w = resample_volume(out.truth.w, spec.grid, inference_grid);
    out.truth_v = resample_volume(out.truth.v, spec.grid, inference_grid);

    const auto units = fem::assemble_unit_matrices(out.forward_mesh, spec.nu);
    const auto system = fem::assemble_global(units, out.truth);

    // The camera cannot see above Nyquist; simulating such modes would only alias.
    const double nyquist = 0.5 * spec.fps;
    const double ceiling = spec.source == ObservationSource::Transient
                               ? std::min(spec.freq_ceiling_hz.value_or(nyquist), nyquist * (1.0 - 1e-9))
                               : spec.freq_ceiling_hz.value_or(std::numeric_limits<double>::infinity());
    const int wanted = std::min(spec.forward_modes, system.size());
    out.forward_basis = std::isfinite(ceiling) ? modal::solve_modes(system, wanted, ceiling)
                                               : modal::solve_modes(system, wanted);
    if (out.forward_basis.count() == 0)
        throw ValidationError("no forward mode lies below " + std::to_string(ceiling) + " Hz");

    const auto sampler = obs::build_sampling_operator(out.inference_mesh, spec.camera, spec.visible_vertices);
    const fem::SparseMatrix S =
        spec.grid == inference_grid
            ? sampler.P
            : obs::build_transfer_operator(out.forward_mesh, out.inference_mesh, spec.camera, sampler.visible_vertices);

    auto& set = out.observations;
    set.q = sampler.q;
    set.projection = spec.camera;
    set.visible_vertices = sampler.visible_vertices;

    if (spec.source == ObservationSource::TrueModes) {
        set.modes = obs::observe_modes(out.forward_basis, S, out.forward_basis.count());
    } else {
        std::vector<std::vector<obs::ObservedMode>> lists;
        double bin_width = 0.0;
        for (const auto& pluck : spec.plucks) {
            const int vertex = nearest_vertex(out.forward_mesh, pluck.position);
            const Eigen::VectorXd d0 = modal::pluck_shape(out.forward_mesh, system.K, vertex, pluck.displacement);
            auto series = modal::simulate_transient(out.forward_basis, system.M, spec.damping, d0, std::nullopt,
                                                    spec.fps, spec.duration);
            const auto spectrum = obs::power_spectrum(obs::sample_series(series, S), spec.window);
            bin_width = spectrum.bin_width();
            const auto peaks = obs::find_peaks(spectrum, spec.peaks);
            out.peaks_per_pluck.push_back(static_cast<int>(peaks.size()));
            lists.push_back(obs::extract_modes(spectrum, peaks, sampler));
            if (keep_series) out.series.push_back(std::move(series));
        }
        set.modes = obs::merge_mode_lists(lists, spec.merge_tol_hz.value_or(bin_width));
    }

    if (spec.freq_ceiling_hz) set.truncate_above(*spec.freq_ceiling_hz);
    if (spec.observed_modes > 0 && static_cast<int>(set.modes.size()) > spec.observed_modes)
        set.modes.resize(spec.observed_modes);
    if (spec.noise_snr) obs::add_gamma_noise(set.modes, sampler.visible_row_mask(), *spec.noise_snr, spec.seed);
    return out;
}

}  // namespace vibtomo::pipeline
