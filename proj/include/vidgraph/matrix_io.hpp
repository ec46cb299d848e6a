#pragma once

#include <string>

#include "vidgraph/common.hpp"

namespace vidgraph {

// Matrix files come in two flavors:
//  - binary: row-major little-endian floats at `path`, with a sidecar JSON
//    manifest at `path + ".json"` holding {rows, cols, dtype, endianness}
//  - TSV: one row per line, tab-separated (accepted on input only)
// load_matrix picks binary when the sidecar manifest exists.

void save_matrix_f32(const std::string& path, const Matrix& m);
void save_matrix_f64(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

// raw row-major f64 blob without manifest (checkpoint tensors)
void save_blob_f64(const std::string& path, const Matrix& m);
Matrix load_blob_f64(const std::string& path, Eigen::Index rows, Eigen::Index cols);

// FNV-1a 64 over file bytes, hex string; manifest content hashes
std::string file_fnv64(const std::string& path);
std::string bytes_fnv64(const void* data, std::size_t n);

}  // namespace vidgraph
