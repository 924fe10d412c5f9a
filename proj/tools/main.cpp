#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vibtomo/error.hpp"
#include "vibtomo/inverse/config.hpp"
#include "vibtomo/pipeline/commands.hpp"

namespace vp = vibtomo::pipeline;
namespace inv = vibtomo::inv;

namespace {

// Flag overrides shared by every command that runs an inversion.
struct InversionOverrides {
    std::optional<double> alpha_u, alpha_w, alpha_v, eta, w_bar;
    std::optional<int> max_iters;

    void add_to(CLI::App* app) {
        app->add_option("--alpha-u", alpha_u, "Data weight");
        app->add_option("--alpha-w", alpha_w, "Young's modulus smoothness weight");
        app->add_option("--alpha-v", alpha_v, "Density smoothness weight");
        app->add_option("--eta", eta, "Dual step size");
        app->add_option("--w-bar", w_bar, "Target mean Young's modulus [Pa]");
        app->add_option("--max-iters", max_iters, "Outer iteration cap");
    }

    void apply(inv::InversionConfig& c) const {
        if (alpha_u) c.alpha_u = *alpha_u;
        if (alpha_w) c.alpha_w = *alpha_w;
        if (alpha_v) c.alpha_v = *alpha_v;
        if (eta) c.eta = *eta;
        if (w_bar) c.w_bar = *w_bar;
        if (max_iters) c.max_iters = *max_iters;
        c.validate();
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Voxel material estimation from image-space vibration modes"};
    app.require_subcommand(1);

    // synth
    std::string synth_spec, synth_out;
    std::optional<std::uint64_t> synth_seed;
    std::optional<double> synth_snr;
    bool write_series = false;
    auto* synth = app.add_subcommand("synth", "Simulate an experiment and write observations");
    synth->add_option("spec", synth_spec, "Experiment JSON")->required()->check(CLI::ExistingFile);
    synth->add_option("-o,--out", synth_out, "Output directory (default: spec output_dir)");
    synth->add_option("--seed", synth_seed, "Noise seed");
    synth->add_option("--snr", synth_snr, "Observation noise SNR");
    synth->add_flag("--write-series", write_series, "Also write the per-pluck displacement series");

    // invert
    vp::InvertOptions invert_opts;
    std::string invert_config;
    std::string invert_obs, invert_mesh, invert_out = "out";
    InversionOverrides invert_over;
    auto* invert = app.add_subcommand("invert", "Estimate w and v from observations");
    invert->add_option("-O,--observations", invert_obs, "Observations JSON")->required()->check(CLI::ExistingFile);
    invert->add_option("-m,--mesh", invert_mesh, "Inference mesh JSON")->required()->check(CLI::ExistingFile);
    invert->add_option("-c,--config", invert_config, "Inversion config JSON")->check(CLI::ExistingFile);
    invert->add_option("-o,--out", invert_out, "Output directory");
    invert->add_option("--freq-ceiling", invert_opts.freq_ceiling_hz, "Drop modes above this frequency [Hz]");
    invert->add_option("--max-modes", invert_opts.max_modes, "Use only the lowest k modes");
    invert_over.add_to(invert);

    // eval
    vp::EvalOptions eval_opts;
    std::string eval_w, eval_v, truth_w, truth_v, eval_out = "eval", colormap = "heat";
    std::optional<std::string> eval_mesh, eval_obs;
    bool no_heatmaps = false;
    auto* evalc = app.add_subcommand("eval", "Compare estimated volumes with the truth");
    evalc->add_option("--est-w", eval_w, "Estimated w volume")->required()->check(CLI::ExistingFile);
    evalc->add_option("--est-v", eval_v, "Estimated v volume")->required()->check(CLI::ExistingFile);
    evalc->add_option("--truth-w", truth_w, "True w volume")->required()->check(CLI::ExistingFile);
    evalc->add_option("--truth-v", truth_v, "True v volume")->required()->check(CLI::ExistingFile);
    evalc->add_option("-m,--mesh", eval_mesh, "Mesh for frequency comparison")->check(CLI::ExistingFile);
    evalc->add_option("-O,--observations", eval_obs, "Observations for frequency comparison")
        ->check(CLI::ExistingFile);
    evalc->add_option("--sigmas", eval_opts.sigmas, "Blur widths for the resolution sweep [voxels]");
    evalc->add_option("--nu", eval_opts.nu, "Poisson's ratio");
    evalc->add_option("--colormap", colormap, "heat or gray");
    evalc->add_option("--pixel-scale", eval_opts.pixel_scale, "Pixels per voxel in heatmaps");
    evalc->add_flag("--no-heatmaps", no_heatmaps, "Skip PNG output");
    evalc->add_option("-o,--out", eval_out, "Output directory");

    // modes
    std::string modes_mesh, modes_w, modes_v, modes_out = "modes";
    int modes_count = 20;
    double modes_nu = 0.3;
    std::optional<double> modes_ceiling;
    auto* modes = app.add_subcommand("modes", "Natural frequencies of a material field");
    modes->add_option("-m,--mesh", modes_mesh, "Mesh JSON")->required()->check(CLI::ExistingFile);
    modes->add_option("-w", modes_w, "Young's modulus volume")->required()->check(CLI::ExistingFile);
    modes->add_option("-v", modes_v, "Density volume")->required()->check(CLI::ExistingFile);
    modes->add_option("-k,--count", modes_count, "Number of modes");
    modes->add_option("--freq-ceiling", modes_ceiling, "Drop modes above this frequency [Hz]");
    modes->add_option("--nu", modes_nu, "Poisson's ratio");
    modes->add_option("-o,--out", modes_out, "Output directory");

    // damping
    std::string damp_series, damp_mesh, damp_obs, damp_out = "damping";
    vibtomo::obs::PeakOptions damp_peaks;
    auto* damping = app.add_subcommand("damping", "Fit damping ratios to the peaks of a displacement series");
    damping->add_option("-s,--series", damp_series, "Series file")->required()->check(CLI::ExistingFile);
    damping->add_option("-m,--mesh", damp_mesh, "Mesh the series lives on")->required()->check(CLI::ExistingFile);
    damping->add_option("-O,--observations", damp_obs, "Observations file supplying the camera")
        ->required()
        ->check(CLI::ExistingFile);
    damping->add_option("--min-prominence", damp_peaks.min_prominence, "Peak prominence in log power");
    damping->add_option("--max-peaks", damp_peaks.max_peaks, "Peak cap (0: unlimited)");
    damping->add_option("-o,--out", damp_out, "Output directory");

    // sweep
    std::string sweep_spec, sweep_out;
    std::vector<int> sweep_counts = {8, 12, 16, 20};
    std::vector<double> sweep_sigmas = vp::EvalOptions{}.sigmas;
    InversionOverrides sweep_over;
    auto* sweep = app.add_subcommand("sweep", "Invert with increasing mode counts and report the trend");
    sweep->add_option("spec", sweep_spec, "Experiment JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("-k,--modes", sweep_counts, "Mode counts");
    sweep->add_option("--sigmas", sweep_sigmas, "Blur widths for the resolution sweep [voxels]");
    sweep->add_option("-o,--out", sweep_out, "Output directory (default: spec output_dir)");
    sweep_over.add_to(sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : vibtomo::exit_code(vibtomo::ErrorCategory::Validation);
    }

    try {
        if (*synth) {
            auto spec = vp::read_experiment(synth_spec);
            if (synth_seed) spec.seed = *synth_seed;
            if (synth_snr) spec.noise_snr = *synth_snr;
            vp::cmd_synth(spec, synth_out.empty() ? spec.output_dir : std::filesystem::path(synth_out), write_series, std::cout);
        } else if (*invert) {
            invert_opts.observations = invert_obs;
            invert_opts.mesh = invert_mesh;
            invert_opts.out_dir = invert_out;
            if (!invert_config.empty()) invert_opts.config = inv::read_config(invert_config);
            invert_over.apply(invert_opts.config);
            return vp::cmd_invert(invert_opts, std::cout);
        } else if (*evalc) {
            eval_opts.est_w = eval_w;
            eval_opts.est_v = eval_v;
            eval_opts.truth_w = truth_w;
            eval_opts.truth_v = truth_v;
            if (eval_mesh) eval_opts.mesh = *eval_mesh;
            if (eval_obs) eval_opts.observations = *eval_obs;
            eval_opts.colormap = vp::colormap_from_string(colormap);
            eval_opts.heatmaps = !no_heatmaps;
            eval_opts.out_dir = eval_out;
            vp::cmd_eval(eval_opts, std::cout);
        } else if (*modes) {
            vp::cmd_modes(modes_mesh, modes_w, modes_v, modes_count, modes_ceiling, modes_nu, modes_out, std::cout);
        } else if (*damping) {
            vp::cmd_damping(damp_series, damp_mesh, damp_obs, damp_peaks, damp_out, std::cout);
        } else if (*sweep) {
            auto spec = vp::read_experiment(sweep_spec);
            sweep_over.apply(spec.inversion);
            vp::cmd_sweep(spec, sweep_counts, sweep_sigmas, sweep_out.empty() ? spec.output_dir : std::filesystem::path(sweep_out),
                          std::cout);
        }
    } catch (const vibtomo::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return vibtomo::exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return vibtomo::exit_code(vibtomo::ErrorCategory::Numerical);
    }
    return 0;
}
