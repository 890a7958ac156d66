#include "mts/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace mts {

ParseError::ParseError(const std::string& what, int line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

int node_count(ElementKind kind) {
  switch (kind) {
    case ElementKind::line2: return 2;
    case ElementKind::tri3: return 3;
    case ElementKind::quad4: return 4;
  }
  return 0;
}

const char* to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::line2: return "line2";
    case ElementKind::tri3: return "tri3";
    case ElementKind::quad4: return "quad4";
  }
  return "?";
}

ElementKind element_kind_from_string(const std::string& name) {
  if (name == "line2") return ElementKind::line2;
  if (name == "tri3") return ElementKind::tri3;
  if (name == "quad4") return ElementKind::quad4;
  throw Error("unknown element kind '" + name + "'");
}

static int kind_dimension(ElementKind kind) { return kind == ElementKind::line2 ? 1 : 2; }

const std::vector<int>& Mesh::boundary_set(const std::string& name) const {
  auto it = boundary_sets.find(name);
  if (it == boundary_sets.end()) throw ConfigError("unknown boundary set '" + name + "'");
  return it->second;
}

bool operator==(const Mesh& a, const Mesh& b) {
  if (a.dimension != b.dimension || a.nodes != b.nodes || a.boundary_sets != b.boundary_sets) return false;
  if (a.elements.size() != b.elements.size()) return false;
  for (std::size_t e = 0; e < a.elements.size(); ++e) {
    if (a.elements[e].kind != b.elements[e].kind || a.elements[e].nodes != b.elements[e].nodes) return false;
  }
  return true;
}

std::vector<int> PartitionMap::elements_of(int subdomain_id) const {
  std::vector<int> out;
  for (std::size_t e = 0; e < element_to_subdomain.size(); ++e) {
    if (element_to_subdomain[e] == subdomain_id) out.push_back(static_cast<int>(e));
  }
  return out;
}

MeshFormat mesh_format_from_path(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "msh") return MeshFormat::msh2;
  return MeshFormat::native;
}

// ---------------------------------------------------------------------------
// geometry

double signed_area(const Mesh& mesh, const Element& element) {
  const auto& n = element.nodes;
  if (element.kind == ElementKind::line2) return mesh.nodes[n[1]][0] - mesh.nodes[n[0]][0];
  double area = 0.0;
  for (std::size_t a = 0; a < n.size(); ++a) {
    const Point& p = mesh.nodes[n[a]];
    const Point& q = mesh.nodes[n[(a + 1) % n.size()]];
    area += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * area;
}

double element_measure(const Mesh& mesh, const Element& element) {
  return std::abs(signed_area(mesh, element));
}

Point element_centroid(const Mesh& mesh, const Element& element) {
  Point c{0.0, 0.0};
  for (int n : element.nodes) {
    c[0] += mesh.nodes[n][0];
    c[1] += mesh.nodes[n][1];
  }
  double k = static_cast<double>(element.nodes.size());
  return {c[0] / k, c[1] / k};
}

static double distance(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

double element_size(const Mesh& mesh, const Element& element) {
  const auto& n = element.nodes;
  const auto& x = mesh.nodes;
  switch (element.kind) {
    case ElementKind::line2: return std::abs(x[n[1]][0] - x[n[0]][0]);
    case ElementKind::tri3: {
      double a = distance(x[n[0]], x[n[1]]);
      double b = distance(x[n[1]], x[n[2]]);
      double c = distance(x[n[2]], x[n[0]]);
      return a * b * c / (2.0 * element_measure(mesh, element));
    }
    case ElementKind::quad4:
      return std::max(distance(x[n[0]], x[n[2]]), distance(x[n[1]], x[n[3]]));
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// validation

void validate_mesh(const Mesh& mesh) {
  if (mesh.dimension != 1 && mesh.dimension != 2) throw Error("mesh dimension must be 1 or 2");
  const int n_nodes = static_cast<int>(mesh.nodes.size());
  for (int i = 0; i < n_nodes; ++i) {
    for (double c : mesh.nodes[i]) {
      if (!std::isfinite(c)) throw Error("node " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const Element& el = mesh.elements[e];
    const std::string tag = "element " + std::to_string(e);
    if (kind_dimension(el.kind) != mesh.dimension) {
      throw Error(tag + ": " + to_string(el.kind) + " does not match mesh dimension " +
                  std::to_string(mesh.dimension));
    }
    if (static_cast<int>(el.nodes.size()) != node_count(el.kind)) throw Error(tag + ": wrong node count");
    for (int n : el.nodes) {
      if (n < 0 || n >= n_nodes) throw Error(tag + ": node index " + std::to_string(n) + " out of range");
    }
    std::vector<int> sorted = el.nodes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error(tag + ": repeated node index");
    }
    if (signed_area(mesh, el) <= 0.0) {
      throw Error(tag + ": negative element area (nodes must be ordered counterclockwise / left to right)");
    }
  }
  for (const auto& [name, set] : mesh.boundary_sets) {
    for (int n : set) {
      if (n < 0 || n >= n_nodes) {
        throw Error("boundary set '" + name + "' references missing node " + std::to_string(n));
      }
    }
  }
}

void check_conforming(const Mesh& mesh) {
  // Coincident nodes that are both used by elements would form an unshared interface.
  std::vector<char> used(mesh.nodes.size(), 0);
  for (const auto& el : mesh.elements) {
    for (int n : el.nodes) used[n] = 1;
  }
  std::vector<int> order;
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    if (used[i]) order.push_back(static_cast<int>(i));
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) { return mesh.nodes[a] < mesh.nodes[b]; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (mesh.nodes[order[k]] == mesh.nodes[order[k - 1]]) {
      throw Error("non-conforming mesh: nodes " + std::to_string(order[k - 1]) + " and " +
                  std::to_string(order[k]) + " coincide");
    }
  }
  if (mesh.dimension == 1) return;

  // Hanging nodes: an edge used once whose interior contains the end of another once-used edge.
  std::map<std::pair<int, int>, int> edge_use;
  for (const auto& el : mesh.elements) {
    const auto& n = el.nodes;
    for (std::size_t a = 0; a < n.size(); ++a) {
      int p = n[a], q = n[(a + 1) % n.size()];
      ++edge_use[{std::min(p, q), std::max(p, q)}];
    }
  }
  std::unordered_map<int, std::vector<int>> once;
  for (const auto& [edge, count] : edge_use) {
    if (count == 1) {
      once[edge.first].push_back(edge.second);
      once[edge.second].push_back(edge.first);
    }
  }
  for (const auto& [a, neighbours] : once) {
    const Point& pa = mesh.nodes[a];
    for (int b : neighbours) {
      const Point& pb = mesh.nodes[b];
      double len = distance(pa, pb);
      for (int m : neighbours) {
        if (m == b) continue;
        const Point& pm = mesh.nodes[m];
        double cross = (pb[0] - pa[0]) * (pm[1] - pa[1]) - (pb[1] - pa[1]) * (pm[0] - pa[0]);
        double along = (pb[0] - pa[0]) * (pm[0] - pa[0]) + (pb[1] - pa[1]) * (pm[1] - pa[1]);
        if (std::abs(cross) <= 1e-12 * len * len && along > 0.0 && along < len * len * (1.0 - 1e-12)) {
          throw Error("non-conforming mesh: hanging node " + std::to_string(m) + " on edge (" +
                      std::to_string(a) + ", " + std::to_string(b) + ")");
        }
      }
    }
  }
}

void validate_partition(const PartitionMap& partition, const Mesh& mesh) {
  if (partition.element_to_subdomain.size() != mesh.elements.size()) {
    throw Error("partition assigns " + std::to_string(partition.element_to_subdomain.size()) +
                " elements but the mesh has " + std::to_string(mesh.elements.size()));
  }
  if (partition.subdomain_count < 1) throw Error("partition has no subdomains");
  std::vector<int> owned(partition.subdomain_count, 0);
  for (std::size_t e = 0; e < partition.element_to_subdomain.size(); ++e) {
    int s = partition.element_to_subdomain[e];
    if (s < 1 || s > partition.subdomain_count) {
      throw Error("element " + std::to_string(e) + " has subdomain id " + std::to_string(s) + " outside [1, " +
                  std::to_string(partition.subdomain_count) + "]");
    }
    ++owned[s - 1];
  }
  for (int s = 0; s < partition.subdomain_count; ++s) {
    if (owned[s] == 0) throw Error("subdomain " + std::to_string(s + 1) + " owns no elements");
  }
}

// ---------------------------------------------------------------------------
// native format

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty line with '#' comments stripped; false at end of input.
  bool next(std::istringstream& out) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      auto hash = raw.find('#');
      if (hash != std::string::npos) raw.erase(hash);
      if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
      out.clear();
      out.str(raw);
      return true;
    }
    return false;
  }

  std::istringstream require(const char* what) {
    std::istringstream ss;
    if (!next(ss)) throw ParseError(std::string("unexpected end of file while reading ") + what, line_);
    return ss;
  }

  int line() const { return line_; }

 private:
  std::istream& in_;
  int line_ = 0;
};

template <typename T>
T read_value(std::istringstream& ss, const LineReader& reader, const char* what) {
  T value{};
  if (!(ss >> value)) throw ParseError(std::string("expected ") + what, reader.line());
  return value;
}

void expect_line_end(std::istringstream& ss, const LineReader& reader) {
  std::string extra;
  if (ss >> extra) throw ParseError("unexpected token '" + extra + "'", reader.line());
}

std::size_t read_header(LineReader& reader, const char* keyword) {
  auto ss = reader.require(keyword);
  std::string word;
  ss >> word;
  if (word != keyword) throw ParseError(std::string("expected section ") + keyword + ", found '" + word + "'", reader.line());
  long long count = read_value<long long>(ss, reader, "a count");
  if (count < 0) throw ParseError("negative count", reader.line());
  expect_line_end(ss, reader);
  return static_cast<std::size_t>(count);
}

void finalize_sets(Mesh& mesh) {
  for (auto& [name, set] : mesh.boundary_sets) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
}

}  // namespace

Mesh read_native_mesh(std::istream& in) {
  LineReader reader(in);
  Mesh mesh;
  {
    auto ss = reader.require("DIMENSION");
    std::string word;
    ss >> word;
    if (word != "DIMENSION") throw ParseError("expected DIMENSION header, found '" + word + "'", reader.line());
    mesh.dimension = read_value<int>(ss, reader, "the mesh dimension");
    if (mesh.dimension != 1 && mesh.dimension != 2) throw ParseError("dimension must be 1 or 2", reader.line());
    expect_line_end(ss, reader);
  }
  std::size_t n_nodes = read_header(reader, "NODES");
  mesh.nodes.resize(n_nodes, Point{0.0, 0.0});
  for (std::size_t i = 0; i < n_nodes; ++i) {
    auto ss = reader.require("node coordinates");
    for (int k = 0; k < mesh.dimension; ++k) mesh.nodes[i][k] = read_value<double>(ss, reader, "a coordinate");
    expect_line_end(ss, reader);
  }
  std::size_t n_elements = read_header(reader, "ELEMENTS");
  mesh.elements.resize(n_elements);
  for (std::size_t e = 0; e < n_elements; ++e) {
    auto ss = reader.require("an element");
    auto kind_name = read_value<std::string>(ss, reader, "an element kind");
    Element el;
    try {
      el.kind = element_kind_from_string(kind_name);
    } catch (const Error&) {
      throw ParseError("unknown element kind '" + kind_name + "'", reader.line());
    }
    el.nodes.resize(node_count(el.kind));
    for (auto& n : el.nodes) n = read_value<int>(ss, reader, "a node index");
    expect_line_end(ss, reader);
    mesh.elements[e] = std::move(el);
  }
  std::istringstream probe;
  if (reader.next(probe)) {
    std::string word;
    probe >> word;
    if (word != "SETS") throw ParseError("expected SETS section, found '" + word + "'", reader.line());
    long long n_sets = read_value<long long>(probe, reader, "a set count");
    expect_line_end(probe, reader);
    for (long long s = 0; s < n_sets; ++s) {
      auto ss = reader.require("a boundary set");
      auto name = read_value<std::string>(ss, reader, "a set name");
      long long size = read_value<long long>(ss, reader, "a set size");
      if (mesh.boundary_sets.count(name)) throw ParseError("duplicate set '" + name + "'", reader.line());
      auto& set = mesh.boundary_sets[name];
      for (long long k = 0; k < size; ++k) set.push_back(read_value<int>(ss, reader, "a node index"));
      expect_line_end(ss, reader);
    }
    if (reader.next(probe)) throw ParseError("trailing content after SETS", reader.line());
  }
  finalize_sets(mesh);
  validate_mesh(mesh);
  return mesh;
}

void write_native_mesh(const Mesh& mesh, std::ostream& out) {
  out << "DIMENSION " << mesh.dimension << "\n";
  out << "NODES " << mesh.nodes.size() << "\n";
  out << std::setprecision(17);
  for (const auto& p : mesh.nodes) {
    out << p[0];
    if (mesh.dimension == 2) out << ' ' << p[1];
    out << "\n";
  }
  out << "ELEMENTS " << mesh.elements.size() << "\n";
  for (const auto& el : mesh.elements) {
    out << to_string(el.kind);
    for (int n : el.nodes) out << ' ' << n;
    out << "\n";
  }
  out << "SETS " << mesh.boundary_sets.size() << "\n";
  for (const auto& [name, set] : mesh.boundary_sets) {
    out << name << ' ' << set.size();
    for (int n : set) out << ' ' << n;
    out << "\n";
  }
}

void save_native_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file '" + path + "'");
  write_native_mesh(mesh, out);
}

// ---------------------------------------------------------------------------
// Gmsh MSH 2.2 ASCII subset

Mesh read_msh2_mesh(std::istream& in) {
  LineReader reader(in);
  auto expect_token = [&](const std::string& token) {
    auto ss = reader.require(token.c_str());
    std::string word;
    ss >> word;
    if (word != token) throw ParseError("expected " + token + ", found '" + word + "'", reader.line());
  };

  expect_token("$MeshFormat");
  {
    auto ss = reader.require("format line");
    std::string version;
    int file_type = -1, data_size = 0;
    ss >> version >> file_type >> data_size;
    if (version != "2.2") throw ParseError("unsupported MSH version '" + version + "' (only 2.2)", reader.line());
    if (file_type != 0) throw ParseError("binary MSH files are not supported", reader.line());
  }
  expect_token("$EndMeshFormat");

  std::map<int, std::string> physical_names;
  std::vector<Point> coords;
  std::unordered_map<long long, int> node_index;
  struct RawElement {
    int type;
    int physical;
    std::vector<long long> nodes;
    int line;
  };
  std::vector<RawElement> raw;

  std::istringstream ss;
  while (reader.next(ss)) {
    std::string section;
    ss >> section;
    if (section == "$PhysicalNames") {
      auto count_line = reader.require("physical name count");
      long long count = read_value<long long>(count_line, reader, "a count");
      for (long long k = 0; k < count; ++k) {
        auto line = reader.require("a physical name");
        int dim = read_value<int>(line, reader, "a dimension");
        (void)dim;
        int tag = read_value<int>(line, reader, "a physical tag");
        std::string rest;
        std::getline(line, rest);
        auto first = rest.find('"'), last = rest.rfind('"');
        if (first == std::string::npos || last == first) throw ParseError("physical name must be quoted", reader.line());
        physical_names[tag] = rest.substr(first + 1, last - first - 1);
      }
      expect_token("$EndPhysicalNames");
    } else if (section == "$Nodes") {
      auto count_line = reader.require("node count");
      long long count = read_value<long long>(count_line, reader, "a count");
      coords.reserve(static_cast<std::size_t>(count));
      for (long long k = 0; k < count; ++k) {
        auto line = reader.require("a node");
        long long id = read_value<long long>(line, reader, "a node id");
        double x = read_value<double>(line, reader, "x");
        double y = read_value<double>(line, reader, "y");
        read_value<double>(line, reader, "z");
        if (!node_index.emplace(id, static_cast<int>(coords.size())).second) {
          throw ParseError("duplicate node id " + std::to_string(id), reader.line());
        }
        coords.push_back({x, y});
      }
      expect_token("$EndNodes");
    } else if (section == "$Elements") {
      auto count_line = reader.require("element count");
      long long count = read_value<long long>(count_line, reader, "a count");
      for (long long k = 0; k < count; ++k) {
        auto line = reader.require("an element");
        read_value<long long>(line, reader, "an element id");
        int type = read_value<int>(line, reader, "an element type");
        int n_tags = read_value<int>(line, reader, "a tag count");
        std::vector<int> tags(std::max(n_tags, 0));
        for (auto& t : tags) t = read_value<int>(line, reader, "a tag");
        int n_nodes = 0;
        switch (type) {
          case 1: n_nodes = 2; break;
          case 2: n_nodes = 3; break;
          case 3: n_nodes = 4; break;
          default:
            throw ParseError("unsupported MSH element type " + std::to_string(type) + " (only 1, 2, 3)", reader.line());
        }
        RawElement el{type, tags.empty() ? 0 : tags[0], {}, reader.line()};
        for (int a = 0; a < n_nodes; ++a) el.nodes.push_back(read_value<long long>(line, reader, "a node id"));
        expect_line_end(line, reader);
        raw.push_back(std::move(el));
      }
      expect_token("$EndElements");
    } else {
      throw ParseError("unsupported MSH section '" + section + "'", reader.line());
    }
  }
  if (coords.empty()) throw ParseError("no $Nodes section");

  Mesh mesh;
  mesh.nodes = coords;
  mesh.dimension = 1;
  for (const auto& el : raw) {
    if (el.type != 1) mesh.dimension = 2;
  }
  for (const auto& el : raw) {
    std::vector<int> nodes;
    for (long long id : el.nodes) {
      auto it = node_index.find(id);
      if (it == node_index.end()) throw ParseError("element references unknown node " + std::to_string(id), el.line);
      nodes.push_back(it->second);
    }
    bool domain_element = mesh.dimension == 1 || el.type != 1;
    if (domain_element) {
      Element e{el.type == 1 ? ElementKind::line2 : (el.type == 2 ? ElementKind::tri3 : ElementKind::quad4), nodes};
      if (signed_area(mesh, e) <= 0.0) {
        throw ParseError("element " + std::to_string(mesh.elements.size()) + ": negative element area", el.line);
      }
      mesh.elements.push_back(std::move(e));
    } else {
      auto it = physical_names.find(el.physical);
      std::string name = it != physical_names.end() ? it->second : "physical_" + std::to_string(el.physical);
      auto& set = mesh.boundary_sets[name];
      set.insert(set.end(), nodes.begin(), nodes.end());
    }
  }
  if (mesh.dimension == 1) {
    for (auto& p : mesh.nodes) p[1] = 0.0;
  }
  // Drop nodes no element or set uses (geometry points in Gmsh output).
  std::vector<int> remap(mesh.nodes.size(), -1);
  for (const auto& el : mesh.elements) {
    for (int n : el.nodes) remap[n] = 0;
  }
  for (const auto& [name, set] : mesh.boundary_sets) {
    for (int n : set) remap[n] = 0;
  }
  std::vector<Point> kept;
  for (std::size_t i = 0; i < remap.size(); ++i) {
    if (remap[i] == 0) {
      remap[i] = static_cast<int>(kept.size());
      kept.push_back(mesh.nodes[i]);
    }
  }
  mesh.nodes = std::move(kept);
  for (auto& el : mesh.elements) {
    for (int& n : el.nodes) n = remap[n];
  }
  for (auto& [name, set] : mesh.boundary_sets) {
    for (int& n : set) n = remap[n];
  }
  finalize_sets(mesh);
  validate_mesh(mesh);
  return mesh;
}

Mesh load_mesh(const std::string& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file '" + path + "'");
  try {
    return format == MeshFormat::msh2 ? read_msh2_mesh(in) : read_native_mesh(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

Mesh load_mesh(const std::string& path) { return load_mesh(path, mesh_format_from_path(path)); }

// ---------------------------------------------------------------------------
// partitions

PartitionMap read_partition(std::istream& in, const Mesh& mesh) {
  LineReader reader(in);
  std::vector<int> ids;
  std::istringstream ss;
  while (reader.next(ss)) {
    ids.push_back(read_value<int>(ss, reader, "a subdomain id"));
    expect_line_end(ss, reader);
  }
  if (ids.size() != mesh.elements.size()) {
    throw ParseError("partition has " + std::to_string(ids.size()) + " entries but the mesh has " +
                     std::to_string(mesh.elements.size()) + " elements (count mismatch)");
  }
  if (ids.empty()) throw ParseError("empty partition");
  int lo = *std::min_element(ids.begin(), ids.end());
  int hi = *std::max_element(ids.begin(), ids.end());
  if (lo != 0 && lo != 1) throw ParseError("subdomain ids must start at 0 or 1");
  PartitionMap partition;
  partition.element_to_subdomain = ids;
  if (lo == 0) {
    for (int& s : partition.element_to_subdomain) ++s;
  }
  partition.subdomain_count = hi + (lo == 0 ? 1 : 0);
  validate_partition(partition, mesh);
  return partition;
}

PartitionMap load_partition(const std::string& path, const Mesh& mesh) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open partition file '" + path + "'");
  return read_partition(in, mesh);
}

void write_partition(const PartitionMap& partition, std::ostream& out) {
  for (int s : partition.element_to_subdomain) out << s << "\n";
}

// ---------------------------------------------------------------------------
// generators

std::pair<Mesh, PartitionMap> build_interval_mesh(const std::vector<double>& region_lengths,
                                                   const std::vector<int>& region_element_counts) {
  if (region_lengths.size() != region_element_counts.size()) {
    throw Error("region lengths and element counts differ in length");
  }
  if (region_lengths.empty()) throw Error("at least one region is required");
  Mesh mesh;
  mesh.dimension = 1;
  PartitionMap partition;
  partition.subdomain_count = static_cast<int>(region_lengths.size());
  double x0 = 0.0;
  mesh.nodes.push_back({0.0, 0.0});
  for (std::size_t r = 0; r < region_lengths.size(); ++r) {
    double length = region_lengths[r];
    int count = region_element_counts[r];
    if (!(length > 0.0)) throw Error("region " + std::to_string(r + 1) + " has nonpositive length");
    if (count < 1) throw Error("region " + std::to_string(r + 1) + " has nonpositive element count");
    for (int k = 1; k <= count; ++k) {
      double x = k == count ? x0 + length : x0 + length * static_cast<double>(k) / count;
      int left = static_cast<int>(mesh.nodes.size()) - 1;
      mesh.nodes.push_back({x, 0.0});
      mesh.elements.push_back({ElementKind::line2, {left, left + 1}});
      partition.element_to_subdomain.push_back(static_cast<int>(r) + 1);
    }
    x0 += length;
  }
  mesh.boundary_sets["left"] = {0};
  mesh.boundary_sets["right"] = {static_cast<int>(mesh.nodes.size()) - 1};
  validate_mesh(mesh);
  return {std::move(mesh), std::move(partition)};
}

Mesh build_rectangle_mesh(double x0, double x1, double y0, double y1, int nx, int ny, ElementKind kind) {
  if (nx < 1 || ny < 1) throw Error("rectangle mesh needs at least one cell per direction");
  if (!(x1 > x0) || !(y1 > y0)) throw Error("rectangle mesh needs positive extents");
  if (kind == ElementKind::line2) throw Error("rectangle mesh needs tri3 or quad4 elements");
  Mesh mesh;
  mesh.dimension = 2;
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j) {
    double y = j == ny ? y1 : y0 + (y1 - y0) * j / ny;
    for (int i = 0; i <= nx; ++i) {
      double x = i == nx ? x1 : x0 + (x1 - x0) * i / nx;
      mesh.nodes.push_back({x, y});
    }
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if (kind == ElementKind::quad4) {
        mesh.elements.push_back({ElementKind::quad4, {a, b, c, d}});
      } else {
        mesh.elements.push_back({ElementKind::tri3, {a, b, c}});
        mesh.elements.push_back({ElementKind::tri3, {a, c, d}});
      }
    }
  }
  for (int j = 0; j <= ny; ++j) {
    mesh.boundary_sets["left"].push_back(id(0, j));
    mesh.boundary_sets["right"].push_back(id(nx, j));
  }
  for (int i = 0; i <= nx; ++i) {
    mesh.boundary_sets["bottom"].push_back(id(i, 0));
    mesh.boundary_sets["top"].push_back(id(i, ny));
  }
  finalize_sets(mesh);
  validate_mesh(mesh);
  return mesh;
}

MeshSummary summarize(const Mesh& mesh) {
  MeshSummary s;
  s.dimension = mesh.dimension;
  s.nodes = mesh.nodes.size();
  s.min_element_size = mesh.elements.empty() ? 0.0 : std::numeric_limits<double>::max();
  for (const auto& el : mesh.elements) {
    ++s.elements_by_kind[to_string(el.kind)];
    s.measure += element_measure(mesh, el);
    double h = element_size(mesh, el);
    s.min_element_size = std::min(s.min_element_size, h);
    s.max_element_size = std::max(s.max_element_size, h);
  }
  for (const auto& [name, set] : mesh.boundary_sets) s.boundary_set_sizes[name] = set.size();
  return s;
}

}  // namespace mts
