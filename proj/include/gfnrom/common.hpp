// SPDX-License-Identifier: Apache-2.0
//
// Shared types, errors and small file helpers.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfnrom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = std::size_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on malformed inputs: wrong shapes, empty meshes, bad parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised when a file cannot be read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

namespace io {

/// Formats a double so that parsing it back yields the identical value.
inline std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::vector<double>> read_csv(const std::filesystem::path& path,
                                                  std::size_t skip_lines = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  for (std::size_t i = 0; i < skip_lines && std::getline(in, line); ++i) {
  }
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw IoError("bad number '" + cell + "' in " + path.string());
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_csv(const std::filesystem::path& path,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << exact(row[j]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

// Blobs are little-endian float64, row-major. The byte-order check keeps the
// format fixed on big-endian hosts too.
inline bool host_is_little_endian() {
  const std::uint16_t probe = 1;
  return *reinterpret_cast<const unsigned char*>(&probe) == 1;
}

inline void write_blob(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const bool little = host_is_little_endian();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      unsigned char bytes[8];
      std::memcpy(bytes, &v, 8);
      if (!little) std::reverse(bytes, bytes + 8);
      out.write(reinterpret_cast<const char*>(bytes), 8);
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

inline Matrix read_blob(const std::filesystem::path& path, Eigen::Index rows,
                        Eigen::Index cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto bytes_total = static_cast<std::streamoff>(in.tellg());
  if (bytes_total != static_cast<std::streamoff>(rows * cols * 8))
    throw IoError("blob " + path.string() + " has " + std::to_string(bytes_total) +
                  " bytes, expected " + std::to_string(rows * cols * 8));
  in.seekg(0);
  Matrix m(rows, cols);
  const bool little = host_is_little_endian();
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      unsigned char bytes[8];
      in.read(reinterpret_cast<char*>(bytes), 8);
      if (!little) std::reverse(bytes, bytes + 8);
      double v;
      std::memcpy(&v, bytes, 8);
      m(i, j) = v;
    }
  }
  if (!in) throw IoError("short read on " + path.string());
  return m;
}

inline void write_vector_blob(const std::filesystem::path& path, const Vector& v) {
  write_blob(path, Matrix(v));
}

inline Vector read_vector_blob(const std::filesystem::path& path, Eigen::Index n) {
  return read_blob(path, n, 1).col(0);
}

}  // namespace io
}  // namespace gfnrom
