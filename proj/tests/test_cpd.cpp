#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cpdtopo/cpd.hpp"
#include "cpdtopo/error.hpp"
#include "cpdtopo/io.hpp"

using namespace cpdtopo;

namespace {

ProblemDef small_cantilever(double vc) {
  BenchmarkSpec spec = default_benchmark("cantilever-distributed");
  spec.nelx = 16;
  spec.nely = 6;
  spec.nelz = 2;
  spec.volume_fraction = vc;
  return generate_benchmark(spec);
}

}  // namespace

TEST(VolumeSchedule, Examples) {
  EXPECT_EQ(volume_schedule(0.5, 1.0, 0.25), (std::vector<double>{0.5, 0.25}));
  const auto s = volume_schedule(0.89, 1.0, 0.3);
  ASSERT_EQ(s.size(), 11u);
  EXPECT_EQ(s.back(), 0.3);
  EXPECT_NEAR(s[0], 0.89, 1e-15);
  EXPECT_TRUE(volume_schedule(0.89, 1.0, 1.0).empty());
  EXPECT_TRUE(volume_schedule(0.89, 0.5, 0.7).empty());
  EXPECT_THROW(volume_schedule(1.0, 1.0, 0.3), InvalidArgument);
}

TEST(VolumeSchedule, LengthMatchesRepeatedMultiplication) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mu_dist(0.5, 0.99), vc_dist(0.05, 0.95);
  for (int t = 0; t < 100; ++t) {
    const double mu = mu_dist(rng), vc = vc_dist(rng);
    std::size_t count = 0;
    for (double v = 1.0; v > vc; v *= mu) ++count;
    const auto s = volume_schedule(mu, 1.0, vc);
    ASSERT_EQ(s.size(), count) << mu << ' ' << vc;
    EXPECT_EQ(s.back(), vc);
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(s[i], s[i - 1]);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) EXPECT_GT(s[i], vc);
  }
}

TEST(Cpd, FullVolumeKeepsEverything) {
  const ProblemDef p = small_cantilever(1.0);
  const CpdResult r = run_cpd(p, {});
  ASSERT_EQ(r.record.size(), 1u);
  EXPECT_EQ(r.volume_reductions, 0);
  for (double x : r.rho) EXPECT_EQ(x, 1.0);
  EXPECT_NEAR(r.record[0].compliance, r.initial_compliance, 1e-9 * r.initial_compliance);
}

TEST(Cpd, CantileverInvariants) {
  BenchmarkSpec spec = default_benchmark("cantilever-distributed");
  spec.nelx = 30;
  spec.nely = 10;
  spec.nelz = 2;
  spec.volume_fraction = 0.5;
  const ProblemDef p = generate_benchmark(spec);
  int observed = 0;
  const StepObserver observer = [&](const StepView& v) {
    ++observed;
    EXPECT_EQ(v.instance.c.size(), p.mesh.num_elements());
    double used = 0.0;
    for (std::size_t i = 0; i < v.knapsack.rho.size(); ++i) used += v.instance.v[i] * v.knapsack.rho[i];
    EXPECT_LE(used, v.instance.budget + 1.0);
  };
  std::vector<StepRecord> streamed;
  const CpdResult r = run_cpd(p, {}, observer, [&](const StepRecord& s) { streamed.push_back(s); });
  EXPECT_EQ(observed, static_cast<int>(r.record.size()));
  EXPECT_EQ(streamed.size(), r.record.size());
  EXPECT_EQ(r.volume_reductions, static_cast<int>(volume_schedule(0.89, 1.0, 0.5).size()));
  double previous = 1.0;
  for (const auto& row : r.record) {
    EXPECT_LE(row.volume, previous);
    previous = row.volume;
  }
  double vol = 0.0;
  for (double x : r.rho) {
    EXPECT_LE(std::min(x, 1.0 - x), 1e-6);
    vol += x;
  }
  EXPECT_LE(std::abs(vol - 0.5 * p.mesh.num_elements()), 1.0);
  EXPECT_LE(r.record.back().change, 1e-3);
  EXPECT_TRUE(connected_components(r.rho, p.mesh, &p).supports_and_loads_connected);
}

TEST(Cpd, Deterministic) {
  const ProblemDef p = small_cantilever(0.5);
  const CpdResult a = run_cpd(p, {});
  const CpdResult b = run_cpd(p, {});
  EXPECT_EQ(a.rho, b.rho);
  EXPECT_EQ(a.u, b.u);
  ASSERT_EQ(a.record.size(), b.record.size());
  for (std::size_t i = 0; i < a.record.size(); ++i) {
    EXPECT_EQ(a.record[i].compliance, b.record[i].compliance);
    EXPECT_EQ(a.record[i].dual, b.record[i].dual);
    EXPECT_EQ(a.record[i].inner_iterations, b.record[i].inner_iterations);
  }
}

TEST(Cpd, PassiveElementsArePinned) {
  ProblemDef p = small_cantilever(0.5);
  p.passive[p.mesh.element_index(8, 3, 0)] = Passive::kVoid;
  p.passive[p.mesh.element_index(2, 5, 1)] = Passive::kSolid;
  const CpdResult r = run_cpd(p, {});
  EXPECT_EQ(r.rho[p.mesh.element_index(8, 3, 0)], 0.0);
  EXPECT_EQ(r.rho[p.mesh.element_index(2, 5, 1)], 1.0);
  double vol = 0.0;
  for (double x : r.rho) vol += x;
  EXPECT_LE(vol, 0.5 * p.mesh.num_elements() + 1.0);
}

TEST(Cpd, FullEnergyWeightingIgnoresDensity) {
  const ProblemDef p = small_cantilever(0.7);
  CpdConfig full;
  full.weighting = EnergyWeighting::kFull;
  full.max_outer = 3;
  std::vector<std::vector<double>> seen[2];
  for (int w = 0; w < 2; ++w) {
    CpdConfig c = w == 0 ? CpdConfig{} : full;
    c.max_outer = 3;
    const StepObserver observer = [&](const StepView& v) {
      for (double x : v.knapsack.rho) EXPECT_TRUE(x == 0.0 || x == 1.0);
      seen[w].push_back(v.instance.c);
    };
    try {
      run_cpd(p, c, observer);
    } catch (const RunFailure& e) {
      EXPECT_EQ(e.rho().size(), p.mesh.num_elements());
    }
  }
  ASSERT_GE(seen[0].size(), 2u);
  ASSERT_GE(seen[1].size(), 2u);
  // Same first design, so step 2 energies differ only on the voids: scaled by
  // E_min in one, at full modulus in the other.
  EXPECT_EQ(seen[0][0], seen[1][0]);
  double void_interp = 0.0, void_full = 0.0;
  for (std::size_t e = 0; e < seen[0][1].size(); ++e) {
    void_interp = std::max(void_interp, seen[0][1][e] < 1e-6 ? seen[0][1][e] : 0.0);
  }
  const auto& a = seen[0][1];
  const auto& b = seen[1][1];
  for (std::size_t e = 0; e < a.size(); ++e) {
    if (b[e] > 1e6 * a[e]) void_full = std::max(void_full, b[e]);
  }
  EXPECT_GT(void_full, 0.0);
  EXPECT_LT(void_interp, 1e-6);
}

TEST(Cpd, OuterCapCarriesPartialRecord) {
  const ProblemDef p = small_cantilever(0.3);
  CpdConfig c;
  c.max_outer = 2;
  try {
    run_cpd(p, c);
    FAIL() << "expected RunFailure";
  } catch (const RunFailure& e) {
    EXPECT_EQ(e.record().size(), 2u);
    ASSERT_EQ(e.rho().size(), p.mesh.num_elements());
    for (double x : e.rho()) EXPECT_TRUE(x == 0.0 || x == 1.0);
  }
}

TEST(Cpd, ConfigValidation) {
  CpdConfig c;
  c.mu = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.omega2 = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.varsigma0 = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_NO_THROW(CpdConfig{}.validate());
}

TEST(Components, Examples) {
  const VoxelMesh m(2, 2, 1);
  EXPECT_EQ(connected_components(std::vector<double>(4, 1.0), m).count, 1);
  // elements (0,0) and (1,1) touch along an edge only
  std::vector<double> checker(4, 0.0);
  checker[m.element_index(0, 0, 0)] = 1.0;
  checker[m.element_index(1, 1, 0)] = 1.0;
  EXPECT_EQ(connected_components(checker, m).count, 2);
  std::vector<double> other(4, 0.0);
  other[m.element_index(1, 0, 0)] = 1.0;
  other[m.element_index(0, 1, 0)] = 1.0;
  EXPECT_EQ(connected_components(other, m).count, 2);
  const auto none = connected_components(std::vector<double>(4, 0.0), m);
  EXPECT_EQ(none.count, 0);
  EXPECT_EQ(none.label, std::vector<int>(4, -1));
}

TEST(Components, SupportsAndLoads) {
  const ProblemDef p = small_cantilever(0.5);
  std::vector<double> rho(p.mesh.num_elements(), 0.0);
  // bottom row of elements spans from the clamped face to the loaded edge
  for (int i = 0; i < p.mesh.nelx(); ++i) {
    for (int k = 0; k < p.mesh.nelz(); ++k) rho[p.mesh.element_index(i, 0, k)] = 1.0;
  }
  EXPECT_TRUE(connected_components(rho, p.mesh, &p).supports_and_loads_connected);
  for (int k = 0; k < p.mesh.nelz(); ++k) rho[p.mesh.element_index(5, 0, k)] = 0.0;
  const auto split = connected_components(rho, p.mesh, &p);
  EXPECT_EQ(split.count, 2);
  EXPECT_FALSE(split.supports_and_loads_connected);
}
