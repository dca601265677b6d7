#include "collapsar/numerics/matrix_io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "collapsar/errors.hpp"
#include "collapsar/util/text.hpp"

namespace collapsar {

namespace {

constexpr char kMagic[4] = {'C', 'M', 'X', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& in, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string encode_matrix_binary(const Matrix& m) {
  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  out.reserve(12 + 8 * m.size());
  for (double v : m.values()) put_f64(out, v);
  return out;
}

Matrix decode_matrix_binary(const std::string& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError("not a CMX1 matrix");
  }
  const auto rows = static_cast<std::size_t>(get_le(bytes, 4, 4));
  const auto cols = static_cast<std::size_t>(get_le(bytes, 8, 4));
  if (bytes.size() != 12 + 8 * rows * cols) throw IoError("CMX1 payload length mismatch");
  std::vector<double> data(rows * cols);
  for (std::size_t i = 0; i < data.size(); ++i)
    data[i] = std::bit_cast<double>(get_le(bytes, 12 + 8 * i, 8));
  return Matrix(rows, cols, std::move(data));
}

Matrix read_matrix_binary(const std::filesystem::path& path) {
  return decode_matrix_binary(slurp(path));
}

void write_matrix_binary(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::string bytes = encode_matrix_binary(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (rows == 0) cols = cells.size();
    if (cells.size() != cols) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    }
    for (const auto& cell : cells) data.push_back(parse_double(cell));
    ++rows;
  }
  return Matrix(rows, cols, std::move(data));
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Matrix read_matrix(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_matrix_csv(path) : read_matrix_binary(path);
}

}  // namespace collapsar
