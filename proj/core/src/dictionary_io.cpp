#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pvcm/array_io.hpp"
#include "pvcm/dictionary.hpp"
#include "pvcm/error.hpp"

namespace pvcm {
namespace {

using nlohmann::ordered_json;

std::string_view spacing_name(Spacing s) {
  return s == Spacing::logarithmic ? "logarithmic" : "linear";
}

Spacing spacing_from(const std::string& name) {
  if (name == "linear") return Spacing::linear;
  if (name == "logarithmic") return Spacing::logarithmic;
  throw FormatError("unknown axis spacing: " + name);
}

}  // namespace

std::filesystem::path save_dictionary(const Dictionary& dict, const std::filesystem::path& dir,
                                      const std::string& stem) {
  const auto matrix_path = dir / (stem + ".sspm");
  const auto sidecar_path = dir / (stem + ".json");
  write_array(matrix_path, NdArray::from_matrix(dict.entries()));

  ordered_json sidecar;
  sidecar["format"] = "pvcm-dictionary/1";
  sidecar["matrix"] = matrix_path.filename().string();
  sidecar["shape"] = {dict.measurements(), dict.spectral_size()};
  sidecar["kernel"] = std::string(to_string(dict.schedule().kernel));
  ordered_json schedule = ordered_json::array();
  const auto& entries = dict.schedule().entries;
  for (Eigen::Index p = 0; p < entries.rows(); ++p) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < entries.cols(); ++j) row.push_back(entries(p, j));
    schedule.push_back(row);
  }
  sidecar["schedule"] = schedule;
  ordered_json axes = ordered_json::array();
  for (const auto& axis : dict.grid().axes()) {
    axes.push_back({{"min", axis.min},
                    {"max", axis.max},
                    {"count", axis.count},
                    {"spacing", spacing_name(axis.spacing)}});
  }
  sidecar["grid"] = {{"axes", axes}};

  std::ofstream out(sidecar_path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + sidecar_path.string());
  out << sidecar.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + sidecar_path.string());
  return sidecar_path;
}

Dictionary load_dictionary(const std::filesystem::path& sidecar_path) {
  std::ifstream in(sidecar_path);
  if (!in) throw IoError("cannot open for reading: " + sidecar_path.string());
  nlohmann::json sidecar;
  try {
    in >> sidecar;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(sidecar_path.string() + ": invalid JSON: " + e.what());
  }
  try {
    if (sidecar.at("format").get<std::string>() != "pvcm-dictionary/1") {
      throw FormatError(sidecar_path.string() + ": not a dictionary sidecar");
    }
    const auto matrix_path = sidecar_path.parent_path() / sidecar.at("matrix").get<std::string>();
    Eigen::MatrixXd k = read_array(matrix_path).to_matrix();

    AcquisitionSchedule schedule;
    schedule.kernel = kernel_from_string(sidecar.at("kernel").get<std::string>());
    const auto& rows = sidecar.at("schedule");
    const auto arity = static_cast<Eigen::Index>(kernel_arity(schedule.kernel));
    schedule.entries.resize(static_cast<Eigen::Index>(rows.size()), arity);
    for (std::size_t p = 0; p < rows.size(); ++p) {
      if (rows[p].size() != static_cast<std::size_t>(arity)) {
        throw FormatError(sidecar_path.string() + ": schedule tuple arity mismatch");
      }
      for (Eigen::Index j = 0; j < arity; ++j) {
        schedule.entries(static_cast<Eigen::Index>(p), j) =
            rows[p][static_cast<std::size_t>(j)].get<double>();
      }
    }
    std::vector<AxisSpec> axes;
    for (const auto& axis : sidecar.at("grid").at("axes")) {
      axes.push_back({axis.at("min").get<double>(), axis.at("max").get<double>(),
                      axis.at("count").get<std::size_t>(),
                      spacing_from(axis.at("spacing").get<std::string>())});
    }
    return Dictionary(std::move(k), build_grid(axes), std::move(schedule));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(sidecar_path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(sidecar_path.string() + ": " + e.what());
  }
}

}  // namespace pvcm
