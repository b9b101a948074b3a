#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "entx/state.hpp"

// JSON state files and report plumbing. A state file carries
//   { "dims": [M, N], "matrix": [[[re, im], ...], ...] }
// with one [re, im] pair per amplitude, rows listed in order. Numbers use
// the library's shortest round-trip encoding, so write-then-read reproduces
// every amplitude bit for bit.

namespace entx::io {

using json = nlohmann::ordered_json;

inline json complex_to_json(const Complex& z) { return json::array({z.real(), z.imag()}); }

inline json matrix_to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json vector_to_json(const RealVector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Complex complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw DimensionMismatch("state file: each amplitude must be a [re, im] pair");
  return Complex(j[0].get<double>(), j[1].get<double>());
}

inline ComplexMatrix matrix_from_json(const json& j, Index rows, Index cols) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw DimensionMismatch("state file: matrix row count does not match dims");
  ComplexMatrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw DimensionMismatch("state file: matrix column count does not match dims");
    for (Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

inline json state_to_json(const BipartitePureState& state) {
  json j;
  j["dims"] = json::array({state.dim_a(), state.dim_b()});
  j["matrix"] = matrix_to_json(state.coeffs());
  return j;
}

inline BipartitePureState state_from_json(const json& j, bool normalize = false) {
  if (!j.contains("dims") || !j.contains("matrix"))
    throw DimensionMismatch("state file: need both \"dims\" and \"matrix\"");
  const json& dims = j["dims"];
  if (!dims.is_array() || dims.size() != 2 || !dims[0].is_number_integer() ||
      !dims[1].is_number_integer())
    throw DimensionMismatch("state file: \"dims\" must be [M, N]");
  Index rows = dims[0].get<Index>();
  Index cols = dims[1].get<Index>();
  if (rows < 1 || cols < 1) throw DimensionMismatch("state file: dims must be positive");
  ComplexMatrix m = matrix_from_json(j["matrix"], rows, cols);
  return validate_state(m, rows, cols, normalize);
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

inline void save_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

inline BipartitePureState read_state(const std::string& path, bool normalize = false) {
  return state_from_json(load_json(path), normalize);
}

inline void write_state(const std::string& path, const BipartitePureState& state) {
  save_json(path, state_to_json(state));
}

/// FNV-1a 64-bit digest of a JSON value's canonical dump, as fixed-width hex.
inline std::string digest(const json& j) {
  std::string dump = j.dump();
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001B3ull;
  }
  static const char* hexdigits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hexdigits[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace entx::io
