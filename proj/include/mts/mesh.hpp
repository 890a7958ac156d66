#pragma once

#include "mts/common.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mts {

enum class ElementKind { line2, tri3, quad4 };

int node_count(ElementKind kind);
const char* to_string(ElementKind kind);
ElementKind element_kind_from_string(const std::string& name);

struct Element {
  ElementKind kind = ElementKind::line2;
  std::vector<int> nodes;
};

struct Mesh {
  int dimension = 1;
  std::vector<Point> nodes;
  std::vector<Element> elements;
  // Sorted, duplicate-free node lists keyed by label.
  std::map<std::string, std::vector<int>> boundary_sets;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t element_count() const { return elements.size(); }
  const std::vector<int>& boundary_set(const std::string& name) const;
};

bool operator==(const Mesh& a, const Mesh& b);

// Element subdomain ids are 1-based.
struct PartitionMap {
  std::vector<int> element_to_subdomain;
  int subdomain_count = 0;

  std::vector<int> elements_of(int subdomain_id) const;
};

enum class MeshFormat { native, msh2 };

MeshFormat mesh_format_from_path(const std::string& path);

// Throws Error naming the offending element or node.
void validate_mesh(const Mesh& mesh);
// Rejects hanging nodes and coincident duplicate nodes.
void check_conforming(const Mesh& mesh);
void validate_partition(const PartitionMap& partition, const Mesh& mesh);

Mesh read_native_mesh(std::istream& in);
Mesh read_msh2_mesh(std::istream& in);
Mesh load_mesh(const std::string& path, MeshFormat format);
Mesh load_mesh(const std::string& path);
void write_native_mesh(const Mesh& mesh, std::ostream& out);
void save_native_mesh(const Mesh& mesh, const std::string& path);

PartitionMap read_partition(std::istream& in, const Mesh& mesh);
PartitionMap load_partition(const std::string& path, const Mesh& mesh);
void write_partition(const PartitionMap& partition, std::ostream& out);

// Contiguous line2 mesh; region r maps to subdomain r + 1.
std::pair<Mesh, PartitionMap> build_interval_mesh(const std::vector<double>& region_lengths,
                                                   const std::vector<int>& region_element_counts);

// Structured nx-by-ny rectangle. tri3 splits every cell along its diagonal.
// Boundary sets: left, right, bottom, top.
Mesh build_rectangle_mesh(double x0, double x1, double y0, double y1, int nx, int ny,
                          ElementKind kind);

// Geometry helpers.
double signed_area(const Mesh& mesh, const Element& element);
double element_measure(const Mesh& mesh, const Element& element);
Point element_centroid(const Mesh& mesh, const Element& element);
// Circumscribed-circle diameter (tri3), longest diagonal (quad4), length (line2).
double element_size(const Mesh& mesh, const Element& element);

struct MeshSummary {
  int dimension = 0;
  std::size_t nodes = 0;
  std::map<std::string, std::size_t> elements_by_kind;
  std::map<std::string, std::size_t> boundary_set_sizes;
  double measure = 0.0;
  double min_element_size = 0.0;
  double max_element_size = 0.0;
};

MeshSummary summarize(const Mesh& mesh);

}  // namespace mts
