#include "collapsar/encoding/pretrained.hpp"

#include <fstream>
#include <string>

#include "collapsar/errors.hpp"
#include "collapsar/numerics/matrix_io.hpp"
#include "collapsar/util/text.hpp"

namespace collapsar {

PretrainedStore::PretrainedStore(Matrix vectors,
                                 std::unordered_map<std::int64_t, std::size_t> rows)
    : vectors_(std::move(vectors)), rows_(std::move(rows)) {
  for (const auto& [id, row] : rows_) {
    if (row >= vectors_.rows()) {
      throw InputError("pretrained id " + std::to_string(id) + " maps past the last row");
    }
  }
}

PretrainedStore PretrainedStore::load(const std::filesystem::path& matrix_path,
                                      const std::filesystem::path& map_path) {
  Matrix vectors = read_matrix(matrix_path);
  std::ifstream in(map_path);
  if (!in) throw IoError("cannot open " + map_path.string());
  std::unordered_map<std::int64_t, std::size_t> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = trim(line);
    if (trimmed.empty() || (line_no == 1 && trimmed == "id,row")) continue;
    const auto cells = split(trimmed, ',');
    if (cells.size() != 2) throw LoadError(line_no, "expected 'id,row'");
    try {
      const auto id = parse_int(cells[0]);
      const auto row = parse_int(cells[1]);
      if (row < 0) throw InputError("negative row");
      if (!rows.emplace(id, static_cast<std::size_t>(row)).second) {
        throw InputError("duplicate id " + std::to_string(id));
      }
    } catch (const InputError& e) {
      throw LoadError(line_no, e.what());
    }
  }
  return PretrainedStore(std::move(vectors), std::move(rows));
}

std::span<const double> PretrainedStore::lookup(std::int64_t id) const {
  const auto it = rows_.find(id);
  if (it == rows_.end()) throw InputError("unknown pretrained id " + std::to_string(id));
  return vectors_.row(it->second);
}

}  // namespace collapsar
