#include "cpdtopo/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cpdtopo/cpd.hpp"
#include "cpdtopo/error.hpp"
#include "cpdtopo/io.hpp"
#include "cpdtopo/simp.hpp"

namespace cpdtopo {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string benchmark;
  std::string problem_file;
  std::string method = "cpd";
  std::string out_dir;
  std::string log_level = "info";
  std::string energy = "interpolated";
  std::string save_problem_file;
  std::optional<double> vc;
  std::optional<double> emin;
  std::optional<int> nelx, nely, nelz;
  double load = 1.0;
  std::vector<double> hole_center;
  std::optional<double> hole_radius;
  CpdConfig cpd;
  SimpConfig simp;
  std::optional<int> max_outer;
};

ProblemDef build_problem(const Options& o) {
  if (!o.problem_file.empty()) {
    ProblemDef p = load_problem(o.problem_file);
    if (o.vc) p.volume_fraction = *o.vc;
    if (o.emin) p.material.E_min = *o.emin;
    p.validate();
    return p;
  }
  BenchmarkSpec spec = default_benchmark(o.benchmark);
  if (o.nelx) spec.nelx = *o.nelx;
  if (o.nely) spec.nely = *o.nely;
  if (o.nelz) spec.nelz = *o.nelz;
  if (o.vc) spec.volume_fraction = *o.vc;
  if (o.emin) spec.material.E_min = *o.emin;
  spec.load = o.load;
  if (!o.hole_center.empty()) spec.hole_center = std::array<double, 2>{o.hole_center[0], o.hole_center[1]};
  spec.hole_radius = o.hole_radius;
  return generate_benchmark(spec);
}

std::size_t gray_count(const std::vector<double>& rho) {
  std::size_t n = 0;
  for (double r : rho) n += (r > 0.01 && r < 0.99) ? 1 : 0;
  return n;
}

int run(const Options& o) {
  const ProblemDef problem = build_problem(o);
  const fs::path out = o.out_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  if (!o.save_problem_file.empty()) save_problem(o.save_problem_file, problem);

  RunSummary summary;
  summary.method = o.method;
  summary.problem = o.problem_file.empty() ? o.benchmark : o.problem_file;
  const auto start = std::chrono::steady_clock::now();
  CsvLog log(out / "convergence.csv");
  const RecordSink sink = [&log](const StepRecord& row) { log.append(row); };

  std::vector<double> rho;
  ConvergenceRecord record;
  if (o.method == "cpd") {
    CpdConfig config = o.cpd;
    if (o.max_outer) config.max_outer = *o.max_outer;
    config.weighting = o.energy == "full" ? EnergyWeighting::kFull : EnergyWeighting::kInterpolated;
    CpdResult result = run_cpd(problem, config, {}, sink);
    rho = std::move(result.rho);
    record = std::move(result.record);
    summary.converged = true;
    summary.volume_reductions = result.volume_reductions;
  } else {
    SimpConfig config = o.simp;
    if (o.max_outer) config.max_iterations = *o.max_outer;
    SimpResult result = run_simp(problem, config, sink);
    rho = std::move(result.rho);
    record = std::move(result.record);
    summary.converged = result.converged;
  }
  log.finish();
  write_vtk(out / "density.vtk", problem.mesh, rho);

  double volume = 0.0;
  for (double r : rho) volume += r;
  summary.compliance = record.empty() ? 0.0 : record.back().compliance;
  summary.volume_fraction = volume * problem.mesh.element_volume() / problem.mesh.total_volume();
  summary.iterations = static_cast<int>(record.size());
  summary.gray_elements = gray_count(rho);
  summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_atomic(out / "summary.txt", format_summary(summary));
  std::cout << format_summary(summary);
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  Options o;
  CLI::App app{"Canonical penalty-duality topology optimization of voxel structures"};
  app.set_version_flag("--version", "cpd_topo 1.0");

  auto* bench = app.add_option("--benchmark", o.benchmark, "Built-in problem")
                    ->check(CLI::IsMember(benchmark_names()));
  auto* file = app.add_option("--problem", o.problem_file, "Problem file (cpd-problem v1)")
                   ->check(CLI::ExistingFile);
  bench->excludes(file);
  file->excludes(bench);

  app.add_option("--method", o.method, "cpd or simp")
      ->check(CLI::IsMember({"cpd", "simp"}))
      ->capture_default_str();
  app.add_option("--out", o.out_dir, "Output directory")->envname("CPD_OUT_DIR");
  app.add_option("--vc", o.vc, "Target volume fraction")->check(CLI::Range(0.0, 1.0));
  app.add_option("--mu", o.cpd.mu, "Volume reduction rate")->capture_default_str();
  app.add_option("--beta", o.cpd.beta, "Perturbation parameter")->capture_default_str();
  app.add_option("--omega1", o.cpd.omega1, "Dual convergence tolerance")->capture_default_str();
  app.add_option("--omega2", o.cpd.omega2, "Design change tolerance")->capture_default_str();
  app.add_option("--max-inner", o.cpd.max_inner, "Knapsack iteration cap")->capture_default_str();
  app.add_option("--energy", o.energy, "Knapsack energies: interpolated or full")
      ->check(CLI::IsMember({"interpolated", "full"}))
      ->capture_default_str();
  app.add_option("--emin", o.emin, "Void modulus");
  app.add_option("--max-outer", o.max_outer, "Outer (or SIMP) iteration cap");
  app.add_option("--penalty", o.simp.penalty, "SIMP penalty power")->capture_default_str();
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}))
      ->capture_default_str();
  auto* nelx = app.add_option("--nelx", o.nelx, "Elements along x");
  auto* nely = app.add_option("--nely", o.nely, "Elements along y");
  auto* nelz = app.add_option("--nelz", o.nelz, "Elements along z");
  auto* load = app.add_option("--load", o.load, "Total load magnitude")->capture_default_str();
  auto* center = app.add_option("--hole-center", o.hole_center, "Hole axis (x y)")->expected(2);
  auto* radius = app.add_option("--hole-radius", o.hole_radius, "Hole radius");
  for (auto* opt : {nelx, nely, nelz, load, center, radius}) opt->excludes(file);
  app.add_option("--save-problem", o.save_problem_file, "Also write the problem file here");

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (o.benchmark.empty() && o.problem_file.empty()) {
    std::cerr << "error: one of --benchmark or --problem is required\n";
    return 2;
  }
  if (o.out_dir.empty()) {
    std::cerr << "error: no output directory (use --out or set CPD_OUT_DIR)\n";
    return 2;
  }

  auto logger = spdlog::get("cpd_topo");
  if (!logger) logger = spdlog::stderr_color_mt("cpd_topo");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(o.log_level));

  try {
    return run(o);
  } catch (const RunFailure& e) {
    std::cerr << "error: " << e.what() << " (after " << e.record().size() << " steps)\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace cpdtopo
