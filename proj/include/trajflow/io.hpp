#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "trajflow/bspline.hpp"
#include "trajflow/matrix.hpp"

namespace trajflow::io {

// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);
uint64_t file_digest(const std::filesystem::path& path);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

// Shared trajectory CSV: header "t,dim0,...,dimK", one row per control tick.
std::string trajectory_csv(const Matrix& values);
void write_trajectory_csv(const std::filesystem::path& path, const Matrix& values);
Matrix read_trajectory_csv(const std::filesystem::path& path);

// Curve JSON: {degree, knots, control_points, domain}.
nlohmann::json curve_to_json(const BSplineCurve& curve);
BSplineCurve curve_from_json(const nlohmann::json& doc);

}  // namespace trajflow::io
