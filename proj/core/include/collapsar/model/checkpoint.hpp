#pragma once

#include <filesystem>

#include "collapsar/model/model.hpp"

namespace collapsar {

/// Writes params/<index>.cmx (binary matrix per parameter) and
/// manifest.json (schema, spec, parameter names/shapes/blocks, table sizes,
/// routing masks) into `dir`.
void save_checkpoint(const Model& model, const std::filesystem::path& dir);

Model load_checkpoint(const std::filesystem::path& dir);

}  // namespace collapsar
