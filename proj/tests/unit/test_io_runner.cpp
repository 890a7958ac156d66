#include "mts/io.hpp"
#include "mts/runner.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mts;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig parse(const std::string& text, const std::string& base = ".") {
  std::istringstream in(text);
  return parse_run_config(in, base, "test.cfg");
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mts_unit_" + name);
  fs::remove_all(p);
  return p;
}

const char* sdof_case3 =
    "[problem]\nname = sdof\nvariant = case3\nmethod = d_continuity\n"
    "[output]\nsnapshot_every = 2\n";

}  // namespace

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, 123456789.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-infinity) == "-inf");
}

TEST_CASE("CSV quoting and rows") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");

  fs::path path = scratch("rows.csv");
  {
    CsvWriter csv(path.string(), {"x", "label, quoted"});
    csv.row(std::vector<double>{0.5, 2.0});
    CHECK_THROWS(csv.row(std::vector<double>{1.0}));
  }
  CHECK(slurp(path) == "x,\"label, quoted\"\r\n0.5,2\r\n");
  fs::remove(path);
}

TEST_CASE("VTK and profile snapshots") {
  Mesh quads = build_rectangle_mesh(0, 1, 0, 1, 1, 1, ElementKind::quad4);
  fs::path vtk = scratch("snap.vtk");
  write_vtk(vtk.string(), quads, "title", {{"c", Vector::LinSpaced(4, 0.0, 3.0)}});
  std::string text = slurp(vtk);
  CHECK(text.rfind("# vtk DataFile Version 3.0\ntitle\nASCII\nDATASET UNSTRUCTURED_GRID\n", 0) == 0);
  CHECK(text.find("POINTS 4 double") != std::string::npos);
  CHECK(text.find("CELLS 1 5\n4 0 1 3 2\n") != std::string::npos);
  CHECK(text.find("CELL_TYPES 1\n9\n") != std::string::npos);
  CHECK(text.find("POINT_DATA 4\nSCALARS c double 1\nLOOKUP_TABLE default\n0\n1\n2\n3\n") != std::string::npos);
  CHECK_THROWS(write_vtk(vtk.string(), quads, "t", {{"c", Vector::Zero(3)}}));
  fs::remove(vtk);

  Mesh rod;
  rod.dimension = 1;
  rod.nodes = {{1.0, 0.0}, {0.0, 0.0}, {0.5, 0.0}};
  rod.elements = {{ElementKind::line2, {1, 2}}, {ElementKind::line2, {2, 0}}};
  fs::path csv = scratch("profile.csv");
  write_profile_csv(csv.string(), rod, {{"c", Vector::LinSpaced(3, 10.0, 30.0)}});
  CHECK(slurp(csv) == "x,c\r\n0,20\r\n0.5,30\r\n1,10\r\n");
  fs::remove(csv);
}

TEST_CASE("config parsing") {
  RunConfig c = parse(
      "[problem]\nname = hemker_2d\nvariant = split\nfixtures = reduced\nmethod = baumgarte\n"
      "[coupling]\ndt = 0.2\nalpha = 1.5\nt_end = 0.4\nclip_negative = no\n"
      "[subdomain 2]\ntheta = 0.75\ndt = 0.01\nformulation = gls\n"
      "[output]\ndirectory = results\nsnapshot_every = 3\n"
      "[convergence]\nlevels = 5\nsubsteps = fixed\n");
  CHECK(c.problem == "hemker_2d");
  CHECK(c.variant == "split");
  CHECK(*c.method == ConstraintMethod::baumgarte);
  CHECK(*c.dt == 0.2);
  CHECK(*c.alpha == 1.5);
  CHECK_FALSE(*c.clip);
  CHECK(*c.subdomains.at(2).theta == 0.75);
  CHECK(*c.subdomains.at(2).formulation == Formulation::gls);
  CHECK(c.output.directory == "results");
  CHECK(c.convergence_levels == 5);
  CHECK(c.convergence_fixed_substeps);

  CHECK_THROWS_AS(parse("[problem]\nname = sdof\n[bogus]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[problem]\nname = sdof\ncolour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse("[coupling]\ndt = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse("[coefficients]\nsource = sin(\n"), ConfigError);
  try {
    parse("[problem]\nname = sdof\n[coupling\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("overrides are validated when the problem is prepared") {
  RunConfig c = parse("[problem]\nname = sdof\nvariant = case3\n[subdomain 2]\ndt = 0.03\n");
  try {
    prepare_problem(c);
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("subdomain 2") != std::string::npos);
  }
  CHECK_THROWS_AS(prepare_problem(parse("[problem]\nname = sdof\n[coupling]\ndt = -1\n")), ConfigError);
  CHECK_THROWS_AS(prepare_problem(parse("[problem]\nname = sdof\n[subdomain 1]\ntheta = 2\n")), ConfigError);
  CHECK_THROWS_AS(prepare_problem(parse("[problem]\nname = sdof\n[subdomain 7]\ntheta = 1\n")), ConfigError);

  PreparedProblem p = prepare_problem(parse("[problem]\nname = sdof\nvariant = case3\n[coupling]\nt_end = 0.5\n"));
  CHECK(p.coupling.n_steps == 5);
  CHECK_FALSE(p.bimolecular);
}

TEST_CASE("observed order is the least-squares slope") {
  std::vector<ConvergenceLevel> levels;
  for (double dt : {0.4, 0.2, 0.1, 0.05}) levels.push_back({dt, 3.0 * dt * dt});
  CHECK(observed_order(levels) == doctest::Approx(2.0));
  levels.back().error *= 1.1;
  CHECK(observed_order(levels) < 2.0);
}

TEST_CASE("convergence of single-domain backward Euler") {
  ProblemDefinition p = sdof_reduced_problem();
  CouplingConfig base = p.coupling;
  ConvergenceTable table = convergence_study(p, base, {0.1, 0.05, 0.025, 0.0125}, false, 1.0);
  CHECK(table.reference == "exact");
  CHECK(table.observed_order == doctest::Approx(1.0).epsilon(0.05));
  for (std::size_t k = 1; k < table.levels.size(); ++k) CHECK(table.levels[k].error < table.levels[k - 1].error);
}

TEST_CASE("state between system levels comes from the recorded sublevels") {
  ProblemDefinition p = sdof_problem(1, ConstraintMethod::baumgarte);
  p.subdomains = {{0.5, 0.01, Formulation::galerkin}, {0.5, 0.01, Formulation::galerkin}};
  CouplingConfig c = p.coupling;
  c.alpha = 1.0;
  c.dt = 0.4;
  c.n_steps = p.steps_for(c.dt);
  auto a = assemble_problem(p, c);
  auto d = state_at(a.system, c, a.d0, 1.0);
  CHECK(std::abs(d[0][0] - std::exp(-1.0)) < 0.05);
  CHECK(std::abs(d[1][0] - std::exp(-1.0)) < 0.05);
  CHECK_THROWS(state_at(a.system, c, a.d0, 1.005));
}

TEST_CASE("run writes the time series, snapshots and summary") {
  RunConfig c = parse(sdof_case3);
  fs::path dir = scratch("run");
  c.output.directory = dir.string();
  std::ostringstream log;
  RunOutcome out = cmd_run(c, log);
  CHECK(fs::exists(dir / "timeseries.csv"));
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(out.max_d_drift <= 1e-10);
  REQUIRE(out.max_abs_error);
  auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["schema_version"] == 1);
  CHECK(summary["problem"] == "sdof");
  CHECK(summary["n_steps"] == 10);
  CHECK(summary["reference"]["max_abs_error"].get<double>() == doctest::Approx(*out.max_abs_error));
  std::string ts = slurp(dir / "timeseries.csv");
  CHECK(std::count(ts.begin(), ts.end(), '\n') == 12);
  CHECK(ts.rfind("step,time,", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("custom problem from expressions") {
  fs::path dir = scratch("custom");
  fs::create_directories(dir);
  {
    std::ofstream mesh(dir / "bar.mesh");
    mesh << "DIMENSION 1\nNODES 5\n0\n0.25\n0.5\n0.75\n1\nELEMENTS 4\n"
            "line2 0 1\nline2 1 2\nline2 2 3\nline2 3 4\nSETS 2\nleft 1 0\nright 1 4\n";
    std::ofstream part(dir / "bar.part");
    part << "1\n1\n2\n2\n";
  }
  std::string cfg =
      "[mesh]\nfile = bar.mesh\npartition = bar.part\n"
      "[coefficients]\ndiffusivity = 1\n"
      "[initial]\nvalue = x\n[dirichlet left]\nvalue = 0\n[dirichlet right]\nvalue = 1\n"
      "[reference]\nvalue = x\n"
      "[coupling]\ndt = 0.1\nt_end = 0.3\n"
      "[subdomain 1]\ntheta = 1\ndt = 0.05\n[subdomain 2]\ntheta = 0.5\ndt = 0.1\n";
  RunConfig c = parse(cfg, dir.string());
  REQUIRE(c.custom);
  PreparedProblem p = prepare_problem(c);
  CHECK(p.single.mesh.element_count() == 4);
  CHECK(p.single.partition.subdomain_count == 2);
  c.output.directory = (dir / "out").string();
  std::ostringstream log;
  RunOutcome out = cmd_run(c, log);
  // the linear profile is steady, so the run must keep it
  REQUIRE(out.max_abs_error);
  CHECK(*out.max_abs_error <= 1e-12);
  CHECK(fs::exists(dir / "out" / "snapshot_000003.csv"));

  CHECK_THROWS_AS(prepare_problem(parse("[mesh]\nfile = bar.mesh\n[coupling]\ndt = 0.1\nt_end = 1\n", dir.string())),
                  ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("analyze and mesh-info print reports") {
  RunConfig c = parse("[problem]\nname = sdof\nvariant = case2\nmethod = baumgarte\n");
  std::ostringstream out;
  StabilityReport r = cmd_analyze(c, out);
  CHECK(r.alpha_max == doctest::Approx(10.0));
  CHECK(out.str().find("0.02") != std::string::npos);

  std::ostringstream info;
  cmd_mesh_info(fixture_path("hemker_reduced.mesh"), info);
  CHECK(info.str().find("tri3") != std::string::npos);
}

TEST_CASE("convergence command needs three levels") {
  RunConfig c = parse("[problem]\nname = sdof_reduced\n[convergence]\nlevels = 2\n");
  std::ostringstream out;
  CHECK_THROWS_AS(cmd_convergence(c, out), ConfigError);
}
