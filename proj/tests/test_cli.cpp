#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef UNITCELL_CLI_PATH
#error "UNITCELL_CLI_PATH must point at the command line binary"
#endif

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(UNITCELL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WEXITSTATUS(rc);
}

fs::path fresh_dir(const char* tag) {
  const fs::path p = fs::temp_directory_path() / (std::string("unitcell_cli_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << text;
}

const char* kFiberProblem = R"({
  "grid": {"nx": 16, "ny": 16},
  "geometry": {"type": "single_fiber", "radius_ratio": 0.25,
               "fiber": {"E": 100.0, "nu": 0.25}, "matrix": {"E": 1.0, "nu": 0.25}},
  "load": {"E12": 0.005},
  "solver": {"scheme": "rpm-polarization"},
  "tolerance": 1e-8,
  "max_iterations": 5000
})";

std::vector<std::string> data_rows(const fs::path& csv) {
  std::ifstream in(csv);
  REQUIRE(in.good());
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line.find("scheme,") != 0) rows.push_back(line);
  return rows;
}

std::string column(const std::string& row, int idx) {
  std::istringstream ss(row);
  std::string cell;
  for (int i = 0; i <= idx; ++i) REQUIRE(std::getline(ss, cell, ','));
  return cell;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("solve writes the full artifact set and reports success") {
  const fs::path dir = fresh_dir("solve");
  write_file(dir / "p.json", kFiberProblem);
  const fs::path out = dir / "run";
  CHECK(run_cli("solve --config " + (dir / "p.json").string() + " --out " + out.string()) == 0);
  for (const char* name :
       {"strain.json", "strain_11.bin", "strain_22.bin", "strain_12.bin", "stress.json",
        "stress_11.bin", "energy_density.json", "energy_density.bin", "report.csv", "history.csv"})
    CHECK(fs::exists(out / name));

  const std::vector<std::string> rows = data_rows(out / "report.csv");
  REQUIRE(rows.size() == 1);
  CHECK(column(rows[0], 0) == "rpm-polarization");
  CHECK(column(rows[0], 1) == "1");

  std::ifstream hist(out / "history.csv");
  std::string line;
  std::getline(hist, line);
  CHECK(line == "# unitcell history v1");
  std::getline(hist, line);
  CHECK(line == "iteration,residual");
  fs::remove_all(dir);
}

TEST_CASE("a capped void solve exits with the total non-convergence code") {
  const fs::path dir = fresh_dir("void");
  write_file(dir / "p.json", R"({
    "grid": {"nx": 16, "ny": 16},
    "geometry": {"type": "single_fiber", "radius_ratio": 0.25,
                 "fiber": {"E": 0.0, "nu": 0.0}, "matrix": {"E": 1.0, "nu": 0.25}},
    "load": {"E11": 0.01},
    "solver": {"scheme": "classical"},
    "tolerance": 1e-8,
    "max_iterations": 50
  })");
  CHECK(run_cli("solve --config " + (dir / "p.json").string() + " --out " + (dir / "o").string()) == 4);
  fs::remove_all(dir);
}

TEST_CASE("a mixed comparison exits with the partial non-convergence code") {
  const fs::path dir = fresh_dir("partial");
  write_file(dir / "p.json", R"({
    "grid": {"nx": 16, "ny": 16},
    "geometry": {"type": "single_fiber", "radius_ratio": 0.25,
                 "fiber": {"E": 100.0, "nu": 0.25}, "matrix": {"E": 1.0, "nu": 0.25}},
    "load": {"E12": 0.005},
    "solvers": [{"scheme": "classical"}, {"scheme": "polarization"}],
    "tolerance": 1e-6,
    "max_iterations": 400
  })");
  CHECK(run_cli("compare --config " + (dir / "p.json").string() + " --out " + (dir / "o").string()) == 3);
  const std::vector<std::string> rows = data_rows(dir / "o" / "compare.csv");
  REQUIRE(rows.size() == 2);
  CHECK(column(rows[0], 1) == "0");
  CHECK(column(rows[1], 1) == "1");
  fs::remove_all(dir);
}

TEST_CASE("configuration problems exit with the dedicated code") {
  const fs::path dir = fresh_dir("errors");
  CHECK(run_cli("solve --config " + (dir / "absent.json").string()) == 2);

  write_file(dir / "broken.json", "{\"grid\": {");
  CHECK(run_cli("solve --config " + (dir / "broken.json").string()) == 2);

  write_file(dir / "scheme.json", R"({
    "grid": {"nx": 8, "ny": 8},
    "geometry": {"type": "homogeneous", "phase": {"E": 1.0, "nu": 0.25}},
    "load": {"E11": 0.01},
    "solver": {"scheme": "speedy"}
  })");
  CHECK(run_cli("solve --config " + (dir / "scheme.json").string()) == 2);

  write_file(dir / "geom.json", R"({
    "grid": {"nx": 8, "ny": 8},
    "geometry": {"type": "spiral"},
    "load": {"E11": 0.01}
  })");
  CHECK(run_cli("solve --config " + (dir / "geom.json").string()) == 2);

  write_file(dir / "zeroload.json", R"({
    "grid": {"nx": 8, "ny": 8},
    "geometry": {"type": "homogeneous", "phase": {"E": 1.0, "nu": 0.25}},
    "load": {}
  })");
  CHECK(run_cli("solve --config " + (dir / "zeroload.json").string()) == 2);

  // laminate geometries have no fiber to rescale
  write_file(dir / "lam.json", R"({
    "grid": {"nx": 8, "ny": 8},
    "geometry": {"type": "laminate", "fraction": 0.5,
                 "phase1": {"E": 10.0, "nu": 0.25}, "phase2": {"E": 1.0, "nu": 0.25}},
    "load": {"E11": 0.01},
    "contrasts": [10, 100]
  })");
  CHECK(run_cli("sweep-contrast --config " + (dir / "lam.json").string()) == 2);

  CHECK(run_cli("solve") == 2);
  fs::remove_all(dir);
}

TEST_CASE("contrast sweeps are deterministic across worker counts") {
  const fs::path dir = fresh_dir("sweep");
  write_file(dir / "p.json", R"({
    "grid": {"nx": 16, "ny": 16},
    "geometry": {"type": "single_fiber", "radius_ratio": 0.25,
                 "fiber": {"E": 100.0, "nu": 0.25}, "matrix": {"E": 1.0, "nu": 0.25}},
    "load": {"E12": 0.005},
    "solvers": [{"scheme": "classical"}, {"scheme": "polarization"}],
    "contrasts": [10, 100],
    "tolerance": 1e-6,
    "max_iterations": 20000
  })");
  CHECK(run_cli("sweep-contrast --config " + (dir / "p.json").string() + " --out " +
                (dir / "a").string()) == 0);
  CHECK(run_cli("sweep-contrast --config " + (dir / "p.json").string() + " --out " +
                (dir / "b").string() + " --workers 3") == 0);

  const std::vector<std::string> a = data_rows(dir / "a" / "sweep_contrast.csv");
  const std::vector<std::string> b = data_rows(dir / "b" / "sweep_contrast.csv");
  REQUIRE(a.size() == 4);
  REQUIRE(b.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(column(a[i], 0) == column(b[i], 0));
    CHECK(column(a[i], 1) == column(b[i], 1));
    CHECK(column(a[i], 3) == column(b[i], 3));  // iteration counts match exactly
  }

  std::ifstream in(dir / "a" / "sweep_contrast.csv");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text.find("# unitcell sweep-contrast v1") == 0);
  CHECK(text.find("# fit scheme=classical slope=") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("reference sweeps run each solver across the listed media") {
  const fs::path dir = fresh_dir("refs");
  write_file(dir / "p.json", R"({
    "grid": {"nx": 16, "ny": 16},
    "geometry": {"type": "single_fiber", "radius_ratio": 0.25,
                 "fiber": {"E": 100.0, "nu": 0.25}, "matrix": {"E": 1.0, "nu": 0.25}},
    "load": {"E12": 0.005},
    "solver": {"scheme": "polarization"},
    "references": [{"E": 50.5, "nu": 0.25}, {"E": 20.0, "nu": 0.25}],
    "tolerance": 1e-6,
    "max_iterations": 20000
  })");
  CHECK(run_cli("sweep-reference --config " + (dir / "p.json").string() + " --out " +
                (dir / "o").string()) == 0);
  const std::vector<std::string> rows = data_rows(dir / "o" / "sweep_reference.csv");
  REQUIRE(rows.size() == 2);
  CHECK(column(rows[0], 1) == "50.5");
  CHECK(column(rows[1], 1) == "20");
  fs::remove_all(dir);
}

TEST_CASE("the tolerance flag overrides the configured value") {
  const fs::path dir = fresh_dir("tol");
  write_file(dir / "p.json", kFiberProblem);
  CHECK(run_cli("solve --config " + (dir / "p.json").string() + " --out " +
                (dir / "tight").string()) == 0);
  CHECK(run_cli("solve --config " + (dir / "p.json").string() + " --out " +
                (dir / "loose").string() + " --tolerance 0.5") == 0);
  const std::vector<std::string> tight = data_rows(dir / "tight" / "report.csv");
  const std::vector<std::string> loose = data_rows(dir / "loose" / "report.csv");
  REQUIRE(tight.size() == 1);
  REQUIRE(loose.size() == 1);
  const int it_tight = std::stoi(column(tight[0], 2));
  const int it_loose = std::stoi(column(loose[0], 2));
  CHECK(it_loose < it_tight);
  CHECK(std::stod(column(loose[0], 3)) <= 0.5);
  fs::remove_all(dir);
}

}  // TEST_SUITE
