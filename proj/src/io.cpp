#include "trajflow/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <vector>

#include "trajflow/rng.hpp"

namespace trajflow::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

uint64_t file_digest(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  return trajflow::fnv1a64(bytes.data(), bytes.size());
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  write_text_file(path, doc.dump(1) + "\n");
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());
  return json::parse(in);
}

std::string trajectory_csv(const Matrix& values) {
  std::string out = "t";
  for (int c = 0; c < values.cols(); ++c) out += ",dim" + std::to_string(c);
  out += '\n';
  for (int r = 0; r < values.rows(); ++r) {
    out += std::to_string(r);
    for (int c = 0; c < values.cols(); ++c) {
      out += ',';
      out += format_double(values(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const Matrix& values) {
  write_text_file(path, trajectory_csv(values));
}

Matrix read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty trajectory CSV: " + path.string());
  if (line.rfind("t,", 0) != 0)
    throw std::runtime_error("bad trajectory CSV header in " + path.string());
  int cols = 0;
  for (char ch : line)
    if (ch == ',') ++cols;

  std::vector<double> data;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t pos = line.find(',');
    if (pos == std::string::npos)
      throw std::runtime_error("bad trajectory CSV row in " + path.string());
    int seen = 0;
    while (pos != std::string::npos) {
      const size_t next = line.find(',', pos + 1);
      const size_t end = next == std::string::npos ? line.size() : next;
      double v = 0.0;
      const char* first = line.data() + pos + 1;
      const auto res = std::from_chars(first, line.data() + end, v);
      if (res.ec != std::errc() || res.ptr != line.data() + end)
        throw std::runtime_error("bad number in trajectory CSV " + path.string());
      data.push_back(v);
      ++seen;
      pos = next;
    }
    if (seen != cols)
      throw std::runtime_error("ragged trajectory CSV row in " + path.string());
    ++rows;
  }

  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json curve_to_json(const BSplineCurve& curve) {
  json doc;
  doc["degree"] = curve.degree();
  doc["knots"] = curve.knots().values();
  json pts = json::array();
  for (int r = 0; r < curve.n_ctrl(); ++r) {
    json row = json::array();
    for (int c = 0; c < curve.dims(); ++c) row.push_back(curve.control_points()(r, c));
    pts.push_back(std::move(row));
  }
  doc["control_points"] = std::move(pts);
  doc["domain"] = {curve.domain_min(), curve.domain_max()};
  return doc;
}

BSplineCurve curve_from_json(const json& doc) {
  KnotVector kv(doc.at("knots").get<std::vector<double>>(), doc.at("degree").get<int>());
  const json& pts = doc.at("control_points");
  const int rows = static_cast<int>(pts.size());
  const int cols = rows > 0 ? static_cast<int>(pts[0].size()) : 0;
  Matrix ctrl(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) ctrl(r, c) = pts[r][c].get<double>();
  return BSplineCurve(std::move(kv), std::move(ctrl));
}

}  // namespace trajflow::io
