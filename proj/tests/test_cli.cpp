#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <unistd.h>

#include "cpdtopo/cli.hpp"
#include "cpdtopo/io.hpp"

using namespace cpdtopo;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "cpd_topo");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cpdtopo_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> small(const std::string& out) {
  return {"--benchmark", "cantilever-distributed", "--nelx", "16", "--nely", "6", "--nelz", "2",
          "--vc", "0.5", "--out", out, "--log-level", "off"};
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST(Cli, NoArgumentsIsUsageError) { EXPECT_EQ(run({}), 2); }

TEST(Cli, ConflictingSources) {
  const fs::path p = fresh_dir("conflict");
  fs::create_directories(p);
  std::ofstream(p / "x.txt") << "cpd-problem v1\n";
  EXPECT_EQ(run({"--benchmark", "wheel", "--problem", (p / "x.txt").string(), "--out", p.string()}), 2);
  EXPECT_EQ(run({"--problem", (p / "x.txt").string(), "--nelx", "4", "--out", p.string()}), 2);
}

TEST(Cli, MissingOutputDirectory) {
  ::unsetenv("CPD_OUT_DIR");
  EXPECT_EQ(run({"--benchmark", "wheel"}), 2);
}

TEST(Cli, BadValues) {
  EXPECT_EQ(run({"--benchmark", "bridge", "--out", "/tmp"}), 2);
  EXPECT_EQ(run({"--benchmark", "wheel", "--method", "beso", "--out", "/tmp"}), 2);
  EXPECT_EQ(run({"--out", "/tmp"}), 2);
}

TEST(Cli, CpdRunWritesArtifacts) {
  const fs::path out = fresh_dir("cpd");
  EXPECT_EQ(run(small(out.string())), 0);
  for (const char* f : {"density.vtk", "convergence.csv", "summary.txt"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const VtkField field = read_vtk(out / "density.vtk");
  EXPECT_EQ(field.values.size(), 192u);
  EXPECT_GE(count_lines(out / "convergence.csv"), 2);
  std::ifstream s(out / "summary.txt");
  std::stringstream text;
  text << s.rdbuf();
  EXPECT_NE(text.str().find("method cpd"), std::string::npos);
}

TEST(Cli, SimpRunAndEnvOutputDir) {
  const fs::path out = fresh_dir("simp");
  ::setenv("CPD_OUT_DIR", out.string().c_str(), 1);
  const int code = run({"--benchmark", "cantilever-distributed", "--nelx", "12", "--nely", "4",
                        "--nelz", "2", "--method", "simp", "--max-outer", "5", "--log-level", "off"});
  ::unsetenv("CPD_OUT_DIR");
  EXPECT_EQ(code, 0);
  EXPECT_EQ(count_lines(out / "convergence.csv"), 6);
}

TEST(Cli, ProblemFileRun) {
  const fs::path out = fresh_dir("file");
  fs::create_directories(out);
  BenchmarkSpec spec = default_benchmark("mbb-central");
  spec.nelx = 10;
  spec.nely = 4;
  spec.nelz = 2;
  spec.volume_fraction = 0.6;
  save_problem(out / "mbb.txt", generate_benchmark(spec));
  EXPECT_EQ(run({"--problem", (out / "mbb.txt").string(), "--out", (out / "res").string(),
                 "--log-level", "off"}),
            0);
  EXPECT_TRUE(fs::exists(out / "res" / "density.vtk"));
}

TEST(Cli, RunFailureExitsOne) {
  const fs::path out = fresh_dir("fail");
  EXPECT_EQ(run({"--benchmark", "cantilever-hole", "--out", out.string(), "--log-level", "off"}), 1);
  EXPECT_EQ(run({"--benchmark", "cantilever-distributed", "--nelx", "12", "--nely", "4", "--nelz",
                 "2", "--vc", "0.3", "--max-outer", "1", "--out", out.string(), "--log-level",
                 "off"}),
            1);
}

TEST(Cli, ExecutableUsageExitCode) {
  const int status = std::system(CPD_TOPO_EXE " > /dev/null 2>&1");
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
}
