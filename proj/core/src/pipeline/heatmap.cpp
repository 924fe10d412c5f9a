#include "vibtomo/pipeline/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "vibtomo/error.hpp"

namespace vibtomo::pipeline {

Colormap colormap_from_string(const std::string& s) {
    if (s == "gray" || s == "grey") return Colormap::Gray;
    if (s == "heat") return Colormap::Heat;
    throw ValidationError("unknown colormap '" + s + "' (expected gray or heat)");
}

std::array<std::uint8_t, 3> colormap_rgb(Colormap map, double t) {
    t = std::isfinite(t) ? std::clamp(t, 0.0, 1.0) : 0.0;
    if (map == Colormap::Gray) {
        auto g = static_cast<std::uint8_t>(std::lround(255.0 * t));
        return {g, g, g};
    }
    static constexpr double anchors[5][3] = {
        {0, 0, 4}, {87, 16, 110}, {188, 55, 84}, {249, 142, 9}, {252, 255, 164}};
    const double x = t * 4.0;
    const int i = std::min(3, static_cast<int>(x));
    const double f = x - i;
    std::array<std::uint8_t, 3> rgb{};
    for (int c = 0; c < 3; ++c)
        rgb[c] = static_cast<std::uint8_t>(std::lround(anchors[i][c] + f * (anchors[i + 1][c] - anchors[i][c])));
    return rgb;
}

void write_heatmap_png(const std::filesystem::path& path, const Eigen::MatrixXd& image, double lo, double hi,
                       Colormap map, int scale) {
    if (image.size() == 0) throw ValidationError("heatmap image is empty");
    if (scale < 1) throw ValidationError("heatmap scale must be >= 1");
    const int width = static_cast<int>(image.cols()) * scale;
    const int height = static_cast<int>(image.rows()) * scale;
    const double range = hi > lo ? hi - lo : 1.0;

    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!file) throw ValidationError("cannot open " + path.string() + " for writing");

    // Allocated before setjmp so a libpng longjmp never skips a constructor.
    std::vector<png_byte> row(static_cast<std::size_t>(width) * 3);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw NumericalError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw NumericalError("libpng failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    for (int r = 0; r < image.rows(); ++r) {
        for (int c = 0; c < image.cols(); ++c) {
            const auto rgb = colormap_rgb(map, (image(r, c) - lo) / range);
            for (int s = 0; s < scale; ++s)
                std::copy(rgb.begin(), rgb.end(), row.begin() + 3 * (static_cast<std::size_t>(c) * scale + s));
        }
        for (int s = 0; s < scale; ++s) png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<std::filesystem::path> write_slice_heatmaps(const std::filesystem::path& prefix,
                                                        const Eigen::VectorXd& field, const fem::VoxelGrid& grid,
                                                        double lo, double hi, Colormap map, int scale) {
    if (field.size() != grid.size()) throw ShapeError("heatmap field does not match its grid");
    std::vector<std::filesystem::path> paths;
    for (int iz = 0; iz < grid.nz(); ++iz) {
        Eigen::MatrixXd slice(grid.ny(), grid.nx());
        for (int iy = 0; iy < grid.ny(); ++iy)
            for (int ix = 0; ix < grid.nx(); ++ix) slice(grid.ny() - 1 - iy, ix) = field[grid.index(ix, iy, iz)];
        auto path = prefix;
        path += "_z" + std::to_string(iz) + ".png";
        write_heatmap_png(path, slice, lo, hi, map, scale);
        paths.push_back(std::move(path));
    }
    return paths;
}

}  // namespace vibtomo::pipeline
