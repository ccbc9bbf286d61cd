#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pvcm {

/// Dense N-dimensional array of doubles, stored column-major (first index
/// varies fastest).
struct NdArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  NdArray() = default;
  NdArray(std::vector<std::size_t> shape, std::vector<double> data);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  static NdArray from_matrix(const Eigen::MatrixXd& m);
  static NdArray from_vector(const Eigen::VectorXd& v);
  /// Requires rank 2 (or rank 1, read as a column).
  Eigen::MatrixXd to_matrix() const;
};

/// Header line written before the payload, without the trailing newline.
/// Example: SSPM1 {"dtype":"f64","shape":[2,3],"order":"col-major"}
std::string sspm_header(std::span<const std::size_t> shape);

/// Writes the SSPM1 format: ASCII magic "SSPM1 ", a one-line JSON header,
/// '\n', then little-endian IEEE-754 binary64 values in column-major order.
void write_array(const std::filesystem::path& path, const NdArray& array);
NdArray read_array(const std::filesystem::path& path);

/// In-memory variants of the above, used by the file functions.
std::string encode_array(const NdArray& array);
NdArray decode_array(const std::string& bytes);

/// Writes an 8-bit binary PGM (P5). Values are scaled so the map maximum
/// becomes 255; negative values clamp to 0. `values` is column-major
/// width x height, i.e. values[x + width * y].
void write_pgm(const std::filesystem::path& path, std::size_t width,
               std::size_t height, std::span<const double> values);

}  // namespace pvcm
