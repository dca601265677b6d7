#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>

#include "collapsar/numerics/matrix.hpp"

namespace collapsar {

/// Frozen pre-trained vectors: a binary matrix plus an "id,row" CSV map.
class PretrainedStore {
 public:
  PretrainedStore(Matrix vectors, std::unordered_map<std::int64_t, std::size_t> rows);

  static PretrainedStore load(const std::filesystem::path& matrix_path,
                              const std::filesystem::path& map_path);

  std::size_t dim() const noexcept { return vectors_.cols(); }
  std::size_t size() const noexcept { return rows_.size(); }
  bool contains(std::int64_t id) const { return rows_.count(id) != 0; }
  std::span<const double> lookup(std::int64_t id) const;

 private:
  Matrix vectors_;
  std::unordered_map<std::int64_t, std::size_t> rows_;
};

}  // namespace collapsar
