#include "vidgraph/matrix_io.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace vidgraph {

namespace {

// native byte order is little-endian on every supported target
static_assert(std::endian::native == std::endian::little,
              "matrix files are little-endian");

void write_manifest(const std::string& path, Eigen::Index rows,
                    Eigen::Index cols, const char* dtype) {
  nlohmann::ordered_json j;
  j["rows"] = rows;
  j["cols"] = cols;
  j["dtype"] = dtype;
  j["endianness"] = "little";
  std::ofstream out(path + ".json", std::ios::binary);
  if (!out) fail("cannot write matrix manifest: " + path + ".json");
  out << j.dump(2) << "\n";
}

template <typename Scalar>
void write_binary(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write matrix file: " + path);
  std::vector<Scalar> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row[static_cast<std::size_t>(c)] = static_cast<Scalar>(m(r, c));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(Scalar)));
  }
}

template <typename Scalar>
Matrix read_binary(const std::string& path, Eigen::Index rows, Eigen::Index cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open matrix file: " + path);
  Matrix m(rows, cols);
  std::vector<Scalar> row(static_cast<std::size_t>(cols));
  for (Eigen::Index r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(Scalar)));
    if (!in) fail("matrix file truncated: " + path);
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = static_cast<double>(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

Matrix load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!rows.empty() && row.size() != rows.front().size())
      fail("ragged TSV matrix: " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail("empty matrix file: " + path);
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return m;
}

}  // namespace

void save_matrix_f32(const std::string& path, const Matrix& m) {
  write_binary<float>(path, m);
  write_manifest(path, m.rows(), m.cols(), "f32");
}

void save_matrix_f64(const std::string& path, const Matrix& m) {
  write_binary<double>(path, m);
  write_manifest(path, m.rows(), m.cols(), "f64");
}

Matrix load_matrix(const std::string& path) {
  const std::string manifest_path = path + ".json";
  if (!std::filesystem::exists(manifest_path)) return load_tsv(path);

  std::ifstream mf(manifest_path);
  nlohmann::json j;
  mf >> j;
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto dtype = j.at("dtype").get<std::string>();
  if (j.contains("endianness") && j["endianness"] != "little")
    fail("unsupported endianness in " + manifest_path);
  if (dtype == "f32") return read_binary<float>(path, rows, cols);
  if (dtype == "f64") return read_binary<double>(path, rows, cols);
  fail("unsupported dtype \"" + dtype + "\" in " + manifest_path);
}

void save_blob_f64(const std::string& path, const Matrix& m) {
  write_binary<double>(path, m);
}

Matrix load_blob_f64(const std::string& path, Eigen::Index rows, Eigen::Index cols) {
  return read_binary<double>(path, rows, cols);
}

std::string bytes_fnv64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_fnv64(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open file for hashing: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  return bytes_fnv64(bytes.data(), bytes.size());
}

}  // namespace vidgraph
