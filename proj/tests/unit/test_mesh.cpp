#include "mts/mesh.hpp"
#include "mts/problems.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

using namespace mts;

namespace {

Mesh parse_native(const std::string& text) {
  std::istringstream in(text);
  return read_native_mesh(in);
}

Mesh parse_msh2(const std::string& text) {
  std::istringstream in(text);
  return read_msh2_mesh(in);
}

std::string error_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

const char* unit_square_msh(bool clockwise) {
  return clockwise ? "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n"
                     "$Nodes\n3\n1 0 0 0\n2 1 0 0\n3 0 1 0\n$EndNodes\n"
                     "$Elements\n1\n1 2 2 0 1 1 3 2\n$EndElements\n"
                   : "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n"
                     "$PhysicalNames\n2\n1 7 \"bottom\"\n2 8 \"inside\"\n$EndPhysicalNames\n"
                     "$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n"
                     "$Elements\n3\n1 1 2 7 1 1 2\n2 2 2 8 1 1 2 3\n3 2 2 8 1 1 3 4\n$EndElements\n";
}

}  // namespace

TEST_CASE("native mesh: smallest valid mesh") {
  Mesh m = parse_native("DIMENSION 1\nNODES 2\n0\n1\nELEMENTS 1\nline2 0 1\n");
  CHECK(m.dimension == 1);
  CHECK(m.node_count() == 2);
  CHECK(m.element_count() == 1);
  CHECK(element_measure(m, m.elements[0]) == doctest::Approx(1.0));
}

TEST_CASE("native mesh: parse errors carry the line number") {
  try {
    parse_native("DIMENSION 1\nNODES 2\n0\n1 2\nELEMENTS 1\nline2 0 1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  CHECK_THROWS_AS(parse_native("DIMENSION 3\n"), ParseError);
  CHECK_THROWS_AS(parse_native("DIMENSION 1\nNODES 2\n0\n1\nELEMENTS 1\nhex8 0 1\n"), ParseError);
}

TEST_CASE("native mesh: invariant violations name the element") {
  auto out_of_range = error_of([] { parse_native("DIMENSION 1\nNODES 2\n0\n1\nELEMENTS 1\nline2 0 2\n"); });
  CHECK(out_of_range.find("element 0") != std::string::npos);
  auto repeated = error_of([] { parse_native("DIMENSION 1\nNODES 2\n0\n1\nELEMENTS 1\nline2 1 1\n"); });
  CHECK(repeated.find("repeated") != std::string::npos);
  auto clockwise =
      error_of([] { parse_native("DIMENSION 2\nNODES 3\n0 0\n1 0\n0 1\nELEMENTS 1\ntri3 0 2 1\n"); });
  CHECK(clockwise.find("negative element area") != std::string::npos);
  auto bad_set = error_of([] { parse_native("DIMENSION 1\nNODES 2\n0\n1\nELEMENTS 1\nline2 0 1\nSETS 1\nend 1 5\n"); });
  CHECK(bad_set.find("missing node 5") != std::string::npos);
}

TEST_CASE("msh2: clockwise triangle is rejected") {
  auto message = error_of([] { parse_msh2(unit_square_msh(true)); });
  CHECK(message.find("negative element area") != std::string::npos);
}

TEST_CASE("msh2: physical groups become boundary sets") {
  Mesh m = parse_msh2(unit_square_msh(false));
  CHECK(m.dimension == 2);
  CHECK(m.element_count() == 2);
  REQUIRE(m.boundary_sets.count("bottom") == 1);
  CHECK(m.boundary_set("bottom") == std::vector<int>{0, 1});
  CHECK(summarize(m).measure == doctest::Approx(1.0));
}

TEST_CASE("msh2: unsupported content is a parse error") {
  CHECK_THROWS_AS(parse_msh2("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n"), ParseError);
  CHECK_THROWS_AS(parse_msh2("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n2\n1 0 0 0\n2 1 0 0\n$EndNodes\n"
                             "$Elements\n1\n1 4 2 0 1 1 2\n$EndElements\n"),
                  ParseError);
}

TEST_CASE("interval mesh: the three-region rod") {
  auto [mesh, partition] = build_interval_mesh({0.1, 0.8, 0.1}, {100, 100, 100});
  CHECK(mesh.element_count() == 300);
  CHECK(mesh.node_count() == 301);
  CHECK(partition.subdomain_count == 3);
  CHECK(mesh.boundary_set("left") == std::vector<int>{0});
  CHECK(mesh.boundary_set("right") == std::vector<int>{300});

  // brute force: nodes touched by elements of more than one subdomain
  std::vector<std::set<int>> owners(mesh.node_count());
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    for (int n : mesh.elements[e].nodes) owners[n].insert(partition.element_to_subdomain[e]);
  }
  int shared = static_cast<int>(std::count_if(owners.begin(), owners.end(), [](const auto& s) { return s.size() > 1; }));
  CHECK(shared == 2);
}

TEST_CASE("interval mesh: single element and argument checks") {
  auto [mesh, partition] = build_interval_mesh({1.0}, {1});
  CHECK(mesh.element_count() == 1);
  CHECK(partition.subdomain_count == 1);
  CHECK_THROWS(build_interval_mesh({1.0, 2.0}, {1}));
  CHECK_THROWS(build_interval_mesh({0.0}, {1}));
  CHECK_THROWS(build_interval_mesh({1.0}, {0}));
}

TEST_CASE("partition files") {
  auto [mesh, unused] = build_interval_mesh({1.0}, {4});
  (void)unused;
  std::istringstream alternating("1\n2\n# comment\n1\n2\n");
  PartitionMap p = read_partition(alternating, mesh);
  CHECK(p.subdomain_count == 2);
  CHECK(p.elements_of(1) == std::vector<int>{0, 2});

  std::istringstream zero_based("0\n1\n0\n1\n");
  CHECK(read_partition(zero_based, mesh).element_to_subdomain == std::vector<int>{1, 2, 1, 2});

  std::istringstream short_file("1\n2\n1\n");
  CHECK_THROWS_AS(read_partition(short_file, mesh), ParseError);

  std::istringstream single("1\n1\n1\n1\n");
  CHECK(read_partition(single, mesh).subdomain_count == 1);

  std::istringstream gap("1\n3\n1\n3\n");
  CHECK_THROWS(read_partition(gap, mesh));
}

TEST_CASE("partition cover property on the shipped fixtures") {
  for (const char* name : {"hemker_reduced", "bimolecular_diffusion_reduced", "bimolecular_advective_reduced"}) {
    CAPTURE(name);
    Mesh mesh = load_mesh(fixture_path(std::string(name) + ".mesh"));
    PartitionMap p = load_partition(fixture_path(std::string(name) + ".part"), mesh);
    std::vector<int> all;
    for (int s = 1; s <= p.subdomain_count; ++s) {
      auto owned = p.elements_of(s);
      CHECK_FALSE(owned.empty());
      all.insert(all.end(), owned.begin(), owned.end());
    }
    std::sort(all.begin(), all.end());
    CHECK(all.size() == mesh.element_count());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
  }
}

TEST_CASE("native round trip is the identity") {
  auto [rod, unused] = build_interval_mesh({0.1, 0.8, 0.1}, {100, 100, 100});
  (void)unused;
  for (const Mesh& original : {rod, build_rectangle_mesh(0, 2, 0, 1, 4, 3, ElementKind::tri3),
                               build_rectangle_mesh(0, 2, 0, 1, 4, 3, ElementKind::quad4)}) {
    std::stringstream buffer;
    write_native_mesh(original, buffer);
    Mesh copy = read_native_mesh(buffer);
    CHECK(copy == original);
  }
  auto path = std::filesystem::temp_directory_path() / "mts_roundtrip.mesh";
  save_native_mesh(rod, path.string());
  CHECK(load_mesh(path.string()) == rod);
  std::filesystem::remove(path);
}

TEST_CASE("element geometry") {
  Mesh tri = build_rectangle_mesh(0, 1, 0, 1, 1, 1, ElementKind::tri3);
  for (const auto& el : tri.elements) {
    CHECK(signed_area(tri, el) == doctest::Approx(0.5));
    // right isosceles triangle: circumscribed diameter is the hypotenuse
    CHECK(element_size(tri, el) == doctest::Approx(std::sqrt(2.0)));
  }
  Mesh quad = build_rectangle_mesh(0, 3, 0, 4, 1, 1, ElementKind::quad4);
  CHECK(element_measure(quad, quad.elements[0]) == doctest::Approx(12.0));
  CHECK(element_size(quad, quad.elements[0]) == doctest::Approx(5.0));
  Point c = element_centroid(quad, quad.elements[0]);
  CHECK(c[0] == doctest::Approx(1.5));
  CHECK(c[1] == doctest::Approx(2.0));
}

TEST_CASE("conformity check rejects hanging nodes") {
  // two triangles on the left, one quad on the right sharing edge x = 1 with an extra midpoint node
  Mesh m;
  m.dimension = 2;
  m.nodes = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {1, 0.5}, {2, 0}, {2, 1}};
  m.elements = {{ElementKind::tri3, {0, 1, 2}}, {ElementKind::tri3, {0, 2, 3}},
                {ElementKind::tri3, {1, 5, 4}}, {ElementKind::tri3, {4, 5, 6}}, {ElementKind::tri3, {4, 6, 2}}};
  validate_mesh(m);
  CHECK_THROWS(check_conforming(m));
  CHECK_NOTHROW(check_conforming(build_rectangle_mesh(0, 1, 0, 1, 3, 3, ElementKind::tri3)));
}
