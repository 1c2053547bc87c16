/**
 * @file unitcell_cli.cpp
 *
 * Command line front end for the homogenization solvers.
 *
 * Subcommands:
 *   solve            one cell problem, with field dumps and iteration history
 *   sweep-contrast   iteration counts across fiber/matrix stiffness contrasts
 *   sweep-reference  iteration counts across reference-medium choices
 *   compare          several solvers on the same problem, side by side
 *
 * Exit codes: 0 every solve converged, 2 configuration or input error,
 * 3 some solves converged, 4 none converged, 1 unexpected failure.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "unitcell/driver.hpp"
#include "unitcell/io.hpp"
#include "unitcell/microstructure.hpp"

namespace {

using nlohmann::json;
using namespace unitcell;

constexpr int kExitAllConverged = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;
constexpr int kExitNone = 4;

/** Configuration problems carry this so they all map to exit code 2. */
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
}

double require_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ConfigError(where + " needs a numeric \"" + key + "\"");
  return j.at(key).get<double>();
}

Phase parse_phase(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object with E and nu");
  return Phase{require_number(j, "E", where), require_number(j, "nu", where)};
}

Grid2 parse_grid(const json& cfg) {
  if (!cfg.contains("grid") || !cfg.at("grid").is_object())
    throw ConfigError("config needs a \"grid\" object");
  const json& g = cfg.at("grid");
  return Grid2(static_cast<int>(require_number(g, "nx", "grid")),
               static_cast<int>(require_number(g, "ny", "grid")), g.value("lx", 1.0),
               g.value("ly", 1.0));
}

LoadCase parse_load(const json& cfg) {
  if (!cfg.contains("load") || !cfg.at("load").is_object())
    throw ConfigError("config needs a \"load\" object with E11/E22/E12");
  const json& l = cfg.at("load");
  const LoadCase load{{l.value("E11", 0.0), l.value("E22", 0.0), l.value("E12", 0.0)}};
  if (load.E.e11 == 0.0 && load.E.e22 == 0.0 && load.E.e12 == 0.0)
    throw ConfigError("load is identically zero; the relative residual would be undefined");
  return load;
}

/** Geometry description kept in parsed form so contrast sweeps can rebuild it. */
struct GeometrySpec {
  std::string type;
  double radius_ratio = 0.0;  // single_fiber
  double radius = 0.0;        // two_fibers
  double separation = 0.0;    // two_fibers
  double fraction = 0.0;      // laminate
  int normal = 0;             // laminate
  Phase fiber{}, matrix{}, phase1{}, phase2{}, homogeneous{};
  std::string map_path;       // phase_map
  std::vector<Phase> map_phases;

  bool has_fiber() const { return type == "single_fiber" || type == "two_fibers"; }
};

GeometrySpec parse_geometry(const json& cfg) {
  if (!cfg.contains("geometry") || !cfg.at("geometry").is_object())
    throw ConfigError("config needs a \"geometry\" object");
  const json& g = cfg.at("geometry");
  GeometrySpec spec;
  spec.type = g.value("type", "");
  if (spec.type == "single_fiber") {
    spec.radius_ratio = require_number(g, "radius_ratio", "single_fiber geometry");
    spec.fiber = parse_phase(g.value("fiber", json()), "geometry.fiber");
    spec.matrix = parse_phase(g.value("matrix", json()), "geometry.matrix");
  } else if (spec.type == "two_fibers") {
    spec.radius = require_number(g, "radius", "two_fibers geometry");
    spec.separation = require_number(g, "separation", "two_fibers geometry");
    spec.fiber = parse_phase(g.value("fiber", json()), "geometry.fiber");
    spec.matrix = parse_phase(g.value("matrix", json()), "geometry.matrix");
  } else if (spec.type == "laminate") {
    spec.fraction = require_number(g, "fraction", "laminate geometry");
    spec.normal = static_cast<int>(g.value("normal", 0));
    spec.phase1 = parse_phase(g.value("phase1", json()), "geometry.phase1");
    spec.phase2 = parse_phase(g.value("phase2", json()), "geometry.phase2");
  } else if (spec.type == "homogeneous") {
    spec.homogeneous = parse_phase(g.value("phase", json()), "geometry.phase");
  } else if (spec.type == "phase_map") {
    spec.map_path = g.value("path", "");
    if (spec.map_path.empty()) throw ConfigError("phase_map geometry needs a \"path\"");
    if (!g.contains("phases") || !g.at("phases").is_array() || g.at("phases").empty())
      throw ConfigError("phase_map geometry needs a nonempty \"phases\" array");
    for (const json& p : g.at("phases")) spec.map_phases.push_back(parse_phase(p, "geometry.phases[]"));
  } else {
    throw ConfigError("unknown geometry type \"" + spec.type +
                      "\" (expected single_fiber, two_fibers, laminate, homogeneous or phase_map)");
  }
  return spec;
}

/** Builds the material; contrast > 0 rescales the fiber to E = contrast * matrix E. */
MaterialField build_material(const GeometrySpec& spec, const Grid2& grid, double contrast) {
  Phase fiber = spec.fiber;
  if (contrast > 0.0) {
    if (!spec.has_fiber())
      throw ConfigError("contrast sweeps need a fiber geometry (single_fiber or two_fibers)");
    fiber.E = contrast * spec.matrix.E;
  }
  if (spec.type == "single_fiber") return single_fiber(grid, spec.radius_ratio, fiber, spec.matrix);
  if (spec.type == "two_fibers")
    return two_fibers(grid, spec.radius, spec.separation, fiber, spec.matrix);
  if (spec.type == "laminate") return laminate(grid, spec.fraction, spec.phase1, spec.phase2, spec.normal);
  if (spec.type == "homogeneous") {
    MaterialField mat;
    mat.grid = grid;
    mat.phases = {spec.homogeneous};
    mat.phase_id = Eigen::ArrayXXi::Zero(grid.nx, grid.ny);
    return mat;
  }
  MaterialField mat;
  try {
    mat = load_phase_map(spec.map_path, spec.map_phases, grid.lx, grid.ly);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  if (!(mat.grid == grid))
    throw ConfigError("phase map size does not match the configured grid");
  return mat;
}

/** Reference-medium rule: midpoint of the extreme phase moduli, or explicit. */
struct ReferenceRule {
  bool explicit_moduli = false;
  double E = 0.0;
  double nu = 0.25;
};

ReferenceRule parse_reference(const json& cfg) {
  ReferenceRule r;
  if (!cfg.contains("reference")) return r;
  const json& j = cfg.at("reference");
  if (!j.is_object()) throw ConfigError("\"reference\" must be an object");
  const std::string rule = j.value("rule", "average");
  r.nu = j.value("nu", 0.25);
  if (rule == "explicit") {
    r.explicit_moduli = true;
    r.E = require_number(j, "E", "explicit reference");
  } else if (rule != "average") {
    throw ConfigError("unknown reference rule \"" + rule + "\" (expected average or explicit)");
  }
  return r;
}

ReferenceMedium build_reference(const ReferenceRule& rule, const MaterialField& material) {
  if (rule.explicit_moduli) return ReferenceMedium::from_moduli(rule.E, rule.nu);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const Phase& p : material.phases) {
    lo = std::min(lo, p.E);
    hi = std::max(hi, p.E);
  }
  return reference_from_average(hi, lo, rule.nu);
}

SolverChoice parse_solver(const json& j) {
  SolverChoice c;
  std::string scheme = j.value("scheme", "classical");
  if (scheme.rfind("rpm-", 0) == 0) {
    c.stabilized = true;
    scheme = scheme.substr(4);
  }
  if (scheme == "classical")
    c.scheme = Scheme::classical;
  else if (scheme == "polarization")
    c.scheme = Scheme::polarization;
  else if (scheme == "gradient_flow")
    c.scheme = Scheme::gradient_flow;
  else
    throw ConfigError("unknown scheme \"" + scheme +
                      "\" (expected classical, polarization or gradient_flow, optionally rpm- prefixed)");
  c.alpha = j.value("alpha", 2.0);
  c.beta = j.value("beta", 2.0);
  c.a = j.value("a", -0.5);
  c.stabilized = j.value("stabilized", c.stabilized);
  if (j.contains("rpm")) {
    const json& r = j.at("rpm");
    if (!r.is_object()) throw ConfigError("\"solver.rpm\" must be an object");
    c.rpm.n_max = static_cast<int>(r.value("n_max", c.rpm.n_max));
    c.rpm.max_basis = static_cast<int>(r.value("max_basis", c.rpm.max_basis));
    c.rpm.growth_ratio = r.value("growth_ratio", c.rpm.growth_ratio);
    c.rpm.fd_step = r.value("fd_step", c.rpm.fd_step);
  }
  if (c.scheme == Scheme::gradient_flow && c.stabilized)
    throw ConfigError("the gradient_flow scheme cannot be projection-stabilized");
  return c;
}

std::vector<SolverChoice> parse_solver_list(const json& cfg) {
  std::vector<SolverChoice> out;
  if (cfg.contains("solvers")) {
    if (!cfg.at("solvers").is_array() || cfg.at("solvers").empty())
      throw ConfigError("\"solvers\" must be a nonempty array of solver objects");
    for (const json& s : cfg.at("solvers")) out.push_back(parse_solver(s));
  } else {
    out.push_back(parse_solver(cfg.value("solver", json::object())));
  }
  return out;
}

FixedPointConfig parse_fixed_point(const json& cfg, double tolerance_override) {
  FixedPointConfig fp;
  fp.tolerance = cfg.value("tolerance", 1e-4);
  fp.max_iterations = static_cast<int>(cfg.value("max_iterations", 10000.0));
  if (tolerance_override > 0.0) fp.tolerance = tolerance_override;
  if (!(fp.tolerance > 0.0)) throw ConfigError("tolerance must be > 0");
  if (fp.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  return fp;
}

/** One scheduled solve; results land at the same index for stable row order. */
struct RunSpec {
  std::string label;
  MaterialField material;
  ReferenceMedium medium;
  SolverChoice choice;
  double contrast = 0.0;
  double ref_E = 0.0, ref_nu = 0.0;
};

struct RunResult {
  SolveReport report;
  TensorField2 strain;
};

std::vector<RunResult> run_all(const std::vector<RunSpec>& specs, const LoadCase& load,
                               const FixedPointConfig& fp, int workers) {
  std::vector<RunResult> out(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      try {
        SolveResult res = solve_cell(specs[i].material, specs[i].medium, load, specs[i].choice, fp);
        out[i] = RunResult{std::move(res.report), std::move(res.strain)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(specs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

int exit_for(const std::vector<RunResult>& results) {
  std::size_t ok = 0;
  for (const RunResult& r : results) ok += r.report.converged ? 1 : 0;
  if (ok == results.size()) return kExitAllConverged;
  return ok == 0 ? kExitNone : kExitPartial;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

/** Least-squares slope of ln(iterations) against ln(x) over converged rows. */
struct LogFit {
  double slope = 0.0;
  int points = 0;
};

LogFit fit_loglog(const std::vector<double>& x, const std::vector<int>& iters,
                  const std::vector<bool>& converged) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!converged[i]) continue;
    const double lx = std::log(x[i]), ly = std::log(static_cast<double>(iters[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  LogFit f;
  f.points = n;
  const double den = n * sxx - sx * sx;
  if (n >= 2 && den != 0.0) f.slope = (n * sxy - sx * sy) / den;
  return f;
}

double energy_density_at(const MaterialField& mat, const TensorField2& eps, int ix, int iy) {
  const Phase& p = mat.phases[static_cast<std::size_t>(mat.phase_id(ix, iy))];
  const SymTensor2<double> e{eps.c11(ix, iy), eps.c22(ix, iy), eps.c12(ix, iy)};
  return 0.5 * ddot(e, apply_voigt(isotropic_stiffness(p.E, p.nu), e));
}

struct CommonArgs {
  std::string config;
  std::string out = "out";
  int workers = 1;
  double tolerance = -1.0;
};

int cmd_solve(const json& cfg, const CommonArgs& args) {
  const Grid2 grid = parse_grid(cfg);
  const GeometrySpec geom = parse_geometry(cfg);
  const LoadCase load = parse_load(cfg);
  const ReferenceRule rule = parse_reference(cfg);
  const FixedPointConfig fp = parse_fixed_point(cfg, args.tolerance);
  const SolverChoice choice = parse_solver(cfg.value("solver", json::object()));

  RunSpec spec;
  spec.label = scheme_name(choice);
  spec.material = build_material(geom, grid, 0.0);
  spec.medium = build_reference(rule, spec.material);
  spec.choice = choice;

  const std::vector<RunResult> results = run_all({spec}, load, fp, args.workers);
  const RunResult& r = results.front();

  const std::filesystem::path dir(args.out);
  std::filesystem::create_directories(dir);
  const json extra = {{"scheme", spec.label},
                      {"converged", r.report.converged},
                      {"iterations", r.report.iterations},
                      {"load", {{"E11", load.E.e11}, {"E22", load.E.e22}, {"E12", load.E.e12}}}};
  save_tensor_field(dir, "strain", r.strain, extra);
  save_tensor_field(dir, "stress", stress_field(spec.material, r.strain), extra);
  Eigen::ArrayXXd w(grid.nx, grid.ny);
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) w(ix, iy) = energy_density_at(spec.material, r.strain, ix, iy);
  save_scalar_field(dir, "energy_density", grid, w, extra);

  {
    std::ofstream hist = open_csv(dir / "history.csv");
    hist << "# unitcell history v1\niteration,residual\n";
    for (std::size_t i = 0; i < r.report.residual_history.size(); ++i)
      hist << (i + 1) << ',' << r.report.residual_history[i] << '\n';
  }
  {
    std::ofstream rep = open_csv(dir / "report.csv");
    rep << "# unitcell report v1\n"
        << "scheme,converged,iterations,residual,elapsed_s,f_evaluations,basis_size,stop_reason,"
           "sigma11,sigma22,sigma12\n";
    const SymTensor2<double>& s = r.report.effective_stress;
    rep << spec.label << ',' << (r.report.converged ? 1 : 0) << ',' << r.report.iterations << ','
        << r.report.residual_history.back() << ',' << r.report.elapsed << ','
        << r.report.f_evaluations << ',' << r.report.basis_size << ',' << r.report.stop_reason
        << ',' << s.e11 << ',' << s.e22 << ',' << s.e12 << '\n';
  }
  std::cout << "solve: scheme=" << spec.label << " converged=" << (r.report.converged ? "yes" : "no")
            << " iterations=" << r.report.iterations
            << " residual=" << r.report.residual_history.back() << " out=" << dir.string() << "\n";
  return exit_for(results);
}

int cmd_sweep_contrast(const json& cfg, const CommonArgs& args) {
  const Grid2 grid = parse_grid(cfg);
  const GeometrySpec geom = parse_geometry(cfg);
  if (!geom.has_fiber())
    throw ConfigError("sweep-contrast needs a fiber geometry (single_fiber or two_fibers)");
  const LoadCase load = parse_load(cfg);
  const ReferenceRule rule = parse_reference(cfg);
  const FixedPointConfig fp = parse_fixed_point(cfg, args.tolerance);
  const std::vector<SolverChoice> solvers = parse_solver_list(cfg);
  if (!cfg.contains("contrasts") || !cfg.at("contrasts").is_array() || cfg.at("contrasts").empty())
    throw ConfigError("sweep-contrast needs a nonempty \"contrasts\" array");
  std::vector<double> contrasts;
  for (const json& k : cfg.at("contrasts")) {
    if (!k.is_number() || !(k.get<double>() > 0.0))
      throw ConfigError("contrast values must be positive numbers");
    contrasts.push_back(k.get<double>());
  }

  std::vector<RunSpec> specs;
  for (const SolverChoice& c : solvers)
    for (double K : contrasts) {
      RunSpec s;
      s.label = scheme_name(c);
      s.material = build_material(geom, grid, K);
      s.medium = build_reference(rule, s.material);
      s.choice = c;
      s.contrast = K;
      specs.push_back(std::move(s));
    }
  const std::vector<RunResult> results = run_all(specs, load, fp, args.workers);

  std::filesystem::create_directories(args.out);
  std::ofstream csv = open_csv(std::filesystem::path(args.out) / "sweep_contrast.csv");
  csv << "# unitcell sweep-contrast v1\n"
      << "scheme,contrast,converged,iterations,residual,elapsed_s,f_evaluations,basis_size\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const SolveReport& rep = results[i].report;
    csv << specs[i].label << ',' << specs[i].contrast << ',' << (rep.converged ? 1 : 0) << ','
        << rep.iterations << ',' << rep.residual_history.back() << ',' << rep.elapsed << ','
        << rep.f_evaluations << ',' << rep.basis_size << '\n';
  }
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    std::vector<double> x;
    std::vector<int> iters;
    std::vector<bool> conv;
    for (std::size_t i = s * contrasts.size(); i < (s + 1) * contrasts.size(); ++i) {
      x.push_back(specs[i].contrast);
      iters.push_back(results[i].report.iterations);
      conv.push_back(results[i].report.converged);
    }
    const LogFit fit = fit_loglog(x, iters, conv);
    csv << "# fit scheme=" << specs[s * contrasts.size()].label << " slope=" << fit.slope
        << " points=" << fit.points << '\n';
    std::cout << "sweep-contrast: scheme=" << specs[s * contrasts.size()].label
              << " slope=" << fit.slope << " points=" << fit.points << "\n";
  }
  return exit_for(results);
}

int cmd_sweep_reference(const json& cfg, const CommonArgs& args) {
  const Grid2 grid = parse_grid(cfg);
  const GeometrySpec geom = parse_geometry(cfg);
  const LoadCase load = parse_load(cfg);
  const FixedPointConfig fp = parse_fixed_point(cfg, args.tolerance);
  const std::vector<SolverChoice> solvers = parse_solver_list(cfg);
  if (!cfg.contains("references") || !cfg.at("references").is_array() || cfg.at("references").empty())
    throw ConfigError("sweep-reference needs a nonempty \"references\" array of {E, nu} objects");
  std::vector<std::pair<double, double>> refs;
  for (const json& r : cfg.at("references"))
    refs.emplace_back(require_number(r, "E", "references[]"), r.value("nu", 0.25));

  const MaterialField material = build_material(geom, grid, 0.0);
  std::vector<RunSpec> specs;
  for (const SolverChoice& c : solvers)
    for (const auto& [E, nu] : refs) {
      RunSpec s;
      s.label = scheme_name(c);
      s.material = material;
      s.medium = ReferenceMedium::from_moduli(E, nu);
      s.choice = c;
      s.ref_E = E;
      s.ref_nu = nu;
      specs.push_back(std::move(s));
    }
  const std::vector<RunResult> results = run_all(specs, load, fp, args.workers);

  std::filesystem::create_directories(args.out);
  std::ofstream csv = open_csv(std::filesystem::path(args.out) / "sweep_reference.csv");
  csv << "# unitcell sweep-reference v1\n"
      << "scheme,E_ref,nu_ref,converged,iterations,residual,elapsed_s\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const SolveReport& rep = results[i].report;
    csv << specs[i].label << ',' << specs[i].ref_E << ',' << specs[i].ref_nu << ','
        << (rep.converged ? 1 : 0) << ',' << rep.iterations << ',' << rep.residual_history.back()
        << ',' << rep.elapsed << '\n';
  }
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    int lo = std::numeric_limits<int>::max(), hi = 0;
    for (std::size_t i = s * refs.size(); i < (s + 1) * refs.size(); ++i) {
      if (!results[i].report.converged) continue;
      lo = std::min(lo, results[i].report.iterations);
      hi = std::max(hi, results[i].report.iterations);
    }
    csv << "# spread scheme=" << specs[s * refs.size()].label;
    if (hi > 0)
      csv << " min=" << lo << " max=" << hi << " ratio=" << static_cast<double>(hi) / lo << '\n';
    else
      csv << " no converged runs\n";
  }
  return exit_for(results);
}

int cmd_compare(const json& cfg, const CommonArgs& args) {
  const Grid2 grid = parse_grid(cfg);
  const GeometrySpec geom = parse_geometry(cfg);
  const LoadCase load = parse_load(cfg);
  const ReferenceRule rule = parse_reference(cfg);
  const FixedPointConfig fp = parse_fixed_point(cfg, args.tolerance);
  const std::vector<SolverChoice> solvers = parse_solver_list(cfg);

  const MaterialField material = build_material(geom, grid, 0.0);
  const ReferenceMedium medium = build_reference(rule, material);
  std::vector<RunSpec> specs;
  for (const SolverChoice& c : solvers) {
    RunSpec s;
    s.label = scheme_name(c);
    s.material = material;
    s.medium = medium;
    s.choice = c;
    specs.push_back(std::move(s));
  }
  const std::vector<RunResult> results = run_all(specs, load, fp, args.workers);

  std::filesystem::create_directories(args.out);
  std::ofstream csv = open_csv(std::filesystem::path(args.out) / "compare.csv");
  csv << "# unitcell compare v1\n"
      << "scheme,converged,iterations,residual,elapsed_s,max_strain_diff_vs_first\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const SolveReport& rep = results[i].report;
    const double diff = results[i].strain.max_abs_diff(results[0].strain);
    csv << specs[i].label << ',' << (rep.converged ? 1 : 0) << ',' << rep.iterations << ','
        << rep.residual_history.back() << ',' << rep.elapsed << ',' << diff << '\n';
    std::cout << "compare: scheme=" << specs[i].label << " converged="
              << (rep.converged ? "yes" : "no") << " iterations=" << rep.iterations
              << " diff_vs_first=" << diff << "\n";
  }
  return exit_for(results);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FFT homogenization solver for 2D periodic elastic unit cells"};
  app.require_subcommand(1);
  CommonArgs args;
  const auto add_common = [&args](CLI::App* sub) {
    sub->add_option("--config", args.config, "JSON problem description")->required();
    sub->add_option("--out", args.out, "output directory (default: out)");
    sub->add_option("--workers", args.workers, "worker threads for independent solves")
        ->check(CLI::PositiveNumber);
    sub->add_option("--tolerance", args.tolerance, "override the configured residual tolerance")
        ->check(CLI::PositiveNumber);
  };
  CLI::App* solve = app.add_subcommand("solve", "run one cell problem and dump fields");
  CLI::App* sweep_c = app.add_subcommand("sweep-contrast", "iteration counts across contrasts");
  CLI::App* sweep_r = app.add_subcommand("sweep-reference", "iteration counts across references");
  CLI::App* compare = app.add_subcommand("compare", "run several solvers on one problem");
  for (CLI::App* sub : {solve, sweep_c, sweep_r, compare}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const json cfg = load_config(args.config);
    if (solve->parsed()) return cmd_solve(cfg, args);
    if (sweep_c->parsed()) return cmd_sweep_contrast(cfg, args);
    if (sweep_r->parsed()) return cmd_sweep_reference(cfg, args);
    return cmd_compare(cfg, args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SingularMatrixError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUnexpected;
  }
}
