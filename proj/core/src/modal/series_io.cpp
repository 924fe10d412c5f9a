#include "vibtomo/modal/series_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vibtomo/error.hpp"

namespace vibtomo::modal {
namespace {

static_assert(std::endian::native == std::endian::little,
              "series I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'V', 'T', 'S', 'E', 'R', 'I', 'E', 'S'};
constexpr std::uint32_t kFloat64 = 1;

template <typename T>
void put(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw ValidationError("truncated series header");
    return value;
}

}  // namespace

void write_series(const DisplacementSeries& series, const std::filesystem::path& path,
                  const std::string& mesh_file, const std::string& layout) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write series file " + path.string());
    const std::uint64_t n = static_cast<std::uint64_t>(series.frames.cols());
    const std::uint64_t T = static_cast<std::uint64_t>(series.frames.rows());
    out.write(kMagic.data(), kMagic.size());
    put(out, n);
    put(out, T);
    put(out, series.fps);
    put(out, kFloat64);
    put(out, std::uint32_t{0});
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = series.frames;
    out.write(reinterpret_cast<const char*>(rows.data()),
              static_cast<std::streamsize>(rows.size() * sizeof(double)));
    if (!out) throw ValidationError("failed writing series file " + path.string());

    nlohmann::json sidecar = {{"series", path.filename().string()},
                              {"mesh", mesh_file},
                              {"n", n},
                              {"T", T},
                              {"fps", series.fps},
                              {"dtype", "float64-le"},
                              {"layout", layout}};
    std::ofstream side(path.string() + ".json");
    side << sidecar.dump(2) << '\n';
}

DisplacementSeries read_series(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read series file " + path.string());
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw ValidationError("not a series file: " + path.string());
    const auto n = get<std::uint64_t>(in);
    const auto T = get<std::uint64_t>(in);
    const auto fps = get<double>(in);
    const auto dtype = get<std::uint32_t>(in);
    (void)get<std::uint32_t>(in);
    if (dtype != kFloat64) throw ValidationError("unsupported series dtype");
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
        static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n));
    in.read(reinterpret_cast<char*>(rows.data()),
            static_cast<std::streamsize>(rows.size() * sizeof(double)));
    if (!in) throw ValidationError("truncated series payload in " + path.string());
    return {Eigen::MatrixXd(rows), fps};
}

}  // namespace vibtomo::modal
