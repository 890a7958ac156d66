#include "mts/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

namespace mts {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{}", value);
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw Error("cannot open " + path + " for writing");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) throw Error("csv row has " + std::to_string(fields.size()) + " fields, expected " +
                                             std::to_string(columns_));
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_field(fields[i]);
  }
  out_ << "\r\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> fields;
  fields.reserve(values.size());
  for (double v : values) fields.push_back(format_number(v));
  row(fields);
}

namespace {

int vtk_cell_type(ElementKind kind) {
  switch (kind) {
    case ElementKind::line2: return 3;
    case ElementKind::tri3: return 5;
    case ElementKind::quad4: return 9;
  }
  return 0;
}

void check_fields(const Mesh& mesh, const std::vector<NamedField>& fields) {
  for (const auto& [name, values] : fields) {
    if (values.size() != static_cast<Eigen::Index>(mesh.node_count())) {
      throw Error("field " + name + " has " + std::to_string(values.size()) + " values for " +
                  std::to_string(mesh.node_count()) + " nodes");
    }
  }
}

}  // namespace

void write_vtk(const std::string& path, const Mesh& mesh, const std::string& title,
               const std::vector<NamedField>& point_fields) {
  check_fields(mesh, point_fields);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "# vtk DataFile Version 3.0\n" << title.substr(0, 255) << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.node_count() << " double\n";
  for (const auto& p : mesh.nodes) out << format_number(p[0]) << ' ' << format_number(p[1]) << " 0\n";
  std::size_t size = 0;
  for (const auto& el : mesh.elements) size += el.nodes.size() + 1;
  out << "CELLS " << mesh.element_count() << ' ' << size << '\n';
  for (const auto& el : mesh.elements) {
    out << el.nodes.size();
    for (int n : el.nodes) out << ' ' << n;
    out << '\n';
  }
  out << "CELL_TYPES " << mesh.element_count() << '\n';
  for (const auto& el : mesh.elements) out << vtk_cell_type(el.kind) << '\n';
  if (point_fields.empty()) return;
  out << "POINT_DATA " << mesh.node_count() << '\n';
  for (const auto& [name, values] : point_fields) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < values.size(); ++i) out << format_number(values[i]) << '\n';
  }
}

void write_profile_csv(const std::string& path, const Mesh& mesh, const std::vector<NamedField>& point_fields) {
  check_fields(mesh, point_fields);
  std::vector<std::string> header = {"x"};
  for (const auto& f : point_fields) header.push_back(f.first);
  CsvWriter csv(path, header);
  std::vector<int> order(mesh.node_count());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return mesh.nodes[a][0] < mesh.nodes[b][0]; });
  std::vector<double> row;
  for (int n : order) {
    row.assign(1, mesh.nodes[n][0]);
    for (const auto& f : point_fields) row.push_back(f.second[n]);
    csv.row(row);
  }
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw Error("cannot create directory " + path + ": " + ec.message());
}

}  // namespace mts
