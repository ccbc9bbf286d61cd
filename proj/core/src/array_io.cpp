#include "pvcm/array_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pvcm/error.hpp"

namespace pvcm {
namespace {

constexpr std::string_view kMagic = "SSPM1 ";

std::size_t element_count(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void put_le64(std::string& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xFFu));
    bits >>= 8;
  }
}

double get_le64(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) {
    bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace

NdArray::NdArray(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (element_count(shape) != data.size()) {
    throw InvalidArgument("NdArray: shape does not match element count");
  }
}

NdArray NdArray::from_matrix(const Eigen::MatrixXd& m) {
  std::vector<double> values(m.data(), m.data() + m.size());
  return NdArray({static_cast<std::size_t>(m.rows()),
                  static_cast<std::size_t>(m.cols())},
                 std::move(values));
}

NdArray NdArray::from_vector(const Eigen::VectorXd& v) {
  std::vector<double> values(v.data(), v.data() + v.size());
  return NdArray({static_cast<std::size_t>(v.size())}, std::move(values));
}

Eigen::MatrixXd NdArray::to_matrix() const {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  if (shape.size() == 1) {
    rows = static_cast<Eigen::Index>(shape[0]);
    cols = 1;
  } else if (shape.size() == 2) {
    rows = static_cast<Eigen::Index>(shape[0]);
    cols = static_cast<Eigen::Index>(shape[1]);
  } else {
    throw InvalidArgument("NdArray::to_matrix: expected a rank-1 or rank-2 array");
  }
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

std::string sspm_header(std::span<const std::size_t> shape) {
  nlohmann::ordered_json header;
  header["dtype"] = "f64";
  header["shape"] = std::vector<std::size_t>(shape.begin(), shape.end());
  header["order"] = "col-major";
  return std::string(kMagic) + header.dump();
}

std::string encode_array(const NdArray& array) {
  if (element_count(array.shape) != array.data.size()) {
    throw InvalidArgument("write_array: shape does not match element count");
  }
  for (double v : array.data) {
    if (!std::isfinite(v)) {
      throw InvalidArgument("write_array: array contains non-finite values");
    }
  }
  std::string out = sspm_header(array.shape);
  out.push_back('\n');
  out.reserve(out.size() + 8 * array.data.size());
  for (double v : array.data) put_le64(out, v);
  return out;
}

NdArray decode_array(const std::string& bytes) {
  if (bytes.compare(0, kMagic.size(), kMagic) != 0) {
    throw FormatError("not an SSPM1 array (magic mismatch)");
  }
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) {
    throw FormatError("SSPM1 header is not newline-terminated");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kMagic.size(), newline - kMagic.size()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("SSPM1 header is not valid JSON: ") + e.what());
  }
  if (!header.is_object() || header.value("dtype", "") != "f64" ||
      header.value("order", "") != "col-major" || !header.contains("shape") ||
      !header["shape"].is_array()) {
    throw FormatError("SSPM1 header must declare dtype f64, col-major order and a shape");
  }
  std::vector<std::size_t> shape;
  for (const auto& dim : header["shape"]) {
    if (!dim.is_number_unsigned()) {
      throw FormatError("SSPM1 shape entries must be nonnegative integers");
    }
    shape.push_back(dim.get<std::size_t>());
  }
  const std::size_t count = element_count(shape);
  const std::size_t payload = bytes.size() - newline - 1;
  if (payload != 8 * count) {
    std::ostringstream msg;
    msg << "SSPM1 payload is " << payload << " bytes but the header shape needs "
        << 8 * count;
    throw FormatError(msg.str());
  }
  std::vector<double> data(count);
  const char* p = bytes.data() + newline + 1;
  for (std::size_t i = 0; i < count; ++i) data[i] = get_le64(p + 8 * i);
  return NdArray(std::move(shape), std::move(data));
}

void write_array(const std::filesystem::path& path, const NdArray& array) {
  const std::string bytes = encode_array(array);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

NdArray read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return decode_array(buffer.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_pgm(const std::filesystem::path& path, std::size_t width,
               std::size_t height, std::span<const double> values) {
  if (values.size() != width * height) {
    throw InvalidArgument("write_pgm: value count does not match width*height");
  }
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, v);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  // PGM rows run top to bottom; row y holds values[x + width * y].
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double v = values[x + width * y];
      const double scaled = peak > 0.0 ? std::clamp(v / peak, 0.0, 1.0) * 255.0 : 0.0;
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(scaled))));
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace pvcm
