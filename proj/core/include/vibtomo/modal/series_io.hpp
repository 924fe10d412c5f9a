#pragma once

#include <filesystem>
#include <string>

#include "vibtomo/modal/transient.hpp"

namespace vibtomo::modal {

/// Binary series container, little-endian:
///   char[8]  magic "VTSERIES"
///   uint64   n   (values per frame)
///   uint64   T   (frame count)
///   float64  fps
///   uint32   dtype (1 = float64)
///   uint32   reserved (0)
///   float64  frames[T][n], row-major
/// A JSON sidecar `<path>.json` records {series, mesh, n, T, fps, dtype, layout}.
void write_series(const DisplacementSeries& series, const std::filesystem::path& path,
                  const std::string& mesh_file, const std::string& layout = "free-dof");

DisplacementSeries read_series(const std::filesystem::path& path);

}  // namespace vibtomo::modal
