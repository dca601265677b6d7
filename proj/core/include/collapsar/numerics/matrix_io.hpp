#pragma once

#include <filesystem>
#include <string>

#include "collapsar/numerics/matrix.hpp"

namespace collapsar {

/// CSV: one matrix row per line, comma separated, no header.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);

/// Binary: "CMX1", u32 rows, u32 cols (little endian), then rows*cols
/// little-endian IEEE-754 doubles in row-major order.
Matrix read_matrix_binary(const std::filesystem::path& path);
void write_matrix_binary(const Matrix& m, const std::filesystem::path& path);

std::string encode_matrix_binary(const Matrix& m);
Matrix decode_matrix_binary(const std::string& bytes);

/// Dispatches on extension: ".csv" → CSV, anything else → binary.
Matrix read_matrix(const std::filesystem::path& path);

}  // namespace collapsar
