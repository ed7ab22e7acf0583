#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "aggdiff/errors.hpp"
#include "aggdiff/pipeline.hpp"

using namespace aggdiff;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("aggdiff_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Analytic 2D stationary data on a coarse mesh: fast and noise-free.
ExperimentConfig quick_config() {
  ExperimentConfig c = preset("example4");
  c.dx = 0.2;
  return c;
}

}  // namespace

TEST(Presets, AllNamesResolve) {
  for (const auto& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    EXPECT_EQ(c.name, name);
    EXPECT_NO_THROW(make_basis(c.basis));
    EXPECT_NO_THROW(c.solver_grid());
    EXPECT_NO_THROW(c.observation_grid());
  }
  EXPECT_THROW(preset("example9"), InvalidParameter);
}

TEST(Presets, TableValues) {
  const ExperimentConfig e1 = preset("example1");
  EXPECT_EQ(e1.dt, 0.5e-4);
  EXPECT_EQ(e1.dx, 1e-2);
  EXPECT_EQ(e1.T, 0.5);
  EXPECT_EQ(e1.R, 6.0);
  EXPECT_EQ(e1.solver_grid().half_count(), 1200);
  EXPECT_NEAR(e1.observation_grid().step(), 0.06, 1e-15);

  const ExperimentConfig e5 = preset("example5");
  EXPECT_EQ(e5.dt, 1e-3);
  EXPECT_EQ(e5.dx, 0.2);
  EXPECT_EQ(e5.T, 0.05);
  EXPECT_EQ(e5.R, 2.1);
  EXPECT_EQ(e5.dim, 2);
}

TEST(Presets, JsonRoundTripPreservesHash) {
  for (const auto& name : preset_names()) {
    const ExperimentConfig c = preset(name);
    const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
    EXPECT_EQ(back.hash(), c.hash()) << name;
    EXPECT_EQ(back.to_json(), c.to_json()) << name;
  }
}

TEST(Presets, HashSeparatesConfigs) {
  ExperimentConfig a = preset("example1");
  ExperimentConfig b = a;
  b.noise.seed ^= 1;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_NE(preset("example1").hash(), preset("example1-desk").hash());
}

TEST(Presets, RejectsMalformedJson) {
  nlohmann::json j = preset("example1").to_json();
  j["data"]["stepping"] = "sometimes";
  EXPECT_THROW(ExperimentConfig::from_json(j), FormatError);
}

TEST(Run, StationaryDataRecoversKernel) {
  const RunResult r = run(quick_config());
  EXPECT_EQ(r.support, std::vector<int>{0});
  ASSERT_TRUE(r.truth);
  EXPECT_LT(r.reconstruction_error, 0.1);
  EXPECT_GT(r.coherence, 0.9);
}

TEST(Run, ArtifactsAndManifest) {
  const fs::path out = scratch("artifacts");
  RunOptions opt;
  opt.out = out;
  const RunResult r = run(quick_config(), opt);
  for (const char* f : {"config.json", "system.bin", "solution.json", "coefficients.csv",
                        "kernel.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const ExperimentConfig back = config_from_manifest(out / "manifest.json");
  EXPECT_EQ(back.hash(), quick_config().hash());
  EXPECT_DOUBLE_EQ(r.manifest["score"]["reconstruction_error"].get<double>(),
                   r.reconstruction_error);
  fs::remove_all(out);
}

TEST(Run, CacheReuseIsBitwise) {
  const fs::path cache = scratch("cache");
  RunOptions opt;
  opt.cache = cache;
  ExperimentConfig c = preset("example3-desk");
  c.T = 0.5;
  const RunResult first = run(c, opt);
  const RunResult second = run(c, opt);
  EXPECT_FALSE(first.cache_hit_data);
  EXPECT_TRUE(second.cache_hit_data);
  EXPECT_TRUE(second.cache_hit_system);
  EXPECT_EQ(first.system.A, second.system.A);
  EXPECT_EQ(first.system.b, second.system.b);
  EXPECT_EQ(first.coefficients, second.coefficients);
  const RunResult fresh = run(c);
  EXPECT_EQ(fresh.system.A, first.system.A);
  fs::remove_all(cache);
}

TEST(Run, StageTaggedFailure) {
  ExperimentConfig c = quick_config();
  c.basis = {{"family", "piecewise"}, {"n", 0}};
  try {
    run(c);
    FAIL() << "expected a pipeline error";
  } catch (const PipelineError& e) {
    EXPECT_FALSE(e.repro().empty());
    EXPECT_FALSE(e.stage().empty());
  }
}

TEST(Sweep, NoiseSweepIsReproducible) {
  ExperimentConfig c = preset("example3-desk");
  c.T = 0.5;
  c.K = 1;
  const NoiseSweep a = sweep_noise(c, {0.0, 1.0}, 3, 99, 1);
  const NoiseSweep b = sweep_noise(c, {0.0, 1.0}, 3, 99, 1);
  ASSERT_EQ(a.rows.size(), 2u);
  EXPECT_EQ(a.rows[0].stddev, 0.0);
  for (std::size_t k = 0; k < a.rows.size(); ++k) EXPECT_EQ(a.rows[k].errors, b.rows[k].errors);
}

#ifdef AGGDIFF_CLI
TEST(Cli, PresetListAndBadArguments) {
  const std::string cli = AGGDIFF_CLI;
  EXPECT_EQ(std::system((cli + " preset list > /dev/null").c_str()), 0);
  EXPECT_NE(std::system((cli + " solve --system /nonexistent.bin > /dev/null 2>&1").c_str()), 0);
}

TEST(Cli, StagedCommandsChain) {
  const fs::path dir = scratch("cli");
  const std::string cli = AGGDIFF_CLI, d = (dir / "d.traj").string(), s = (dir / "s.bin").string(),
                    sol = (dir / "sol.json").string();
  const std::string quiet = " > /dev/null 2>&1";
  EXPECT_EQ(std::system((cli + " simulate --preset example4 --out " + d + quiet).c_str()), 0);
  EXPECT_EQ(std::system((cli + " assemble --preset example4 --data " + d + " --out " + s + quiet).c_str()), 0);
  EXPECT_EQ(std::system((cli + " solve --system " + s + " -K 1 --out " + sol + quiet).c_str()), 0);
  EXPECT_EQ(std::system((cli + " score --preset example4 --solution " + sol + quiet).c_str()), 0);
  fs::remove_all(dir);
}
#endif
