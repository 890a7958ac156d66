#pragma once

#include "mts/common.hpp"
#include "mts/mesh.hpp"

#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mts {

// Shortest decimal that round-trips to the same double.
std::string format_number(double value);

// RFC-4180: quote when the field holds a comma, quote, CR or LF; double embedded quotes.
std::string csv_field(std::string_view text);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& fields);
  void row(const std::vector<double>& values);
  std::size_t columns() const { return columns_; }

 private:
  std::ofstream out_;
  std::size_t columns_ = 0;
};

using NamedField = std::pair<std::string, Vector>;

// Legacy VTK 3.0 ASCII unstructured grid with POINT_DATA scalars.
void write_vtk(const std::string& path, const Mesh& mesh, const std::string& title,
               const std::vector<NamedField>& point_fields);
// 1D snapshot: one row per node ordered by x.
void write_profile_csv(const std::string& path, const Mesh& mesh, const std::vector<NamedField>& point_fields);

void ensure_directory(const std::string& path);

}  // namespace mts
