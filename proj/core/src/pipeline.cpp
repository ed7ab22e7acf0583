#include "aggdiff/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "aggdiff/data_pipeline.hpp"
#include "aggdiff/errors.hpp"
#include "aggdiff/hashing.hpp"
#include "aggdiff/metrics.hpp"

namespace aggdiff {

namespace fs = std::filesystem;

namespace {

nlohmann::json simulation_key(const ExperimentConfig& c, int stride) {
  nlohmann::json j = c.to_json();
  return {{"model", j["model"]},
          {"initial", j["initial"]},
          {"grid", j["grid"]},
          {"analytic", c.analytic},
          {"stepping", j["data"]["stepping"]},
          {"cfl_safety", c.cfl_safety},
          {"theta", c.theta},
          {"stride", stride}};
}

nlohmann::json system_key(const ExperimentConfig& c) {
  return {{"simulation", simulation_key(c, c.ct)},
          {"cx", c.cx},
          {"ct", c.ct},
          {"noise_percent", c.noise.percent},
          {"seed", c.noise.seed},
          {"basis", c.basis},
          {"assembly", c.assembly}};
}

std::string bytes_hash(std::span<const double> v) {
  const auto h = fnv1a64(std::string_view(reinterpret_cast<const char*>(v.data()), v.size_bytes()));
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

std::string system_hash(const LinearSystem& sys) {
  std::vector<double> all(sys.A.data(), sys.A.data() + sys.A.size());
  all.insert(all.end(), sys.b.data(), sys.b.data() + sys.b.size());
  return bytes_hash(all);
}

DensityTrajectory simulate_strided(const ExperimentConfig& config, int stride, SolveStats* stats) {
  const Grid grid = config.solver_grid();
  const auto rho0 = initial_slice(config.initial, grid);
  if (config.analytic) {
    const Grid g = grid.with_time(grid.dt() * stride, grid.steps() / stride);
    std::vector<double> values;
    values.reserve(rho0.size() * static_cast<std::size_t>(g.time_slices()));
    for (int l = 0; l < g.time_slices(); ++l) values.insert(values.end(), rho0.begin(), rho0.end());
    Provenance p;
    p.model_hash = config.model.hash();
    p.stages = {"analytic"};
    return DensityTrajectory(g, std::move(values), false, p);
  }
  SolverConfig sc;
  sc.grid = grid;
  sc.cfl_safety = config.cfl_safety;
  sc.theta = config.theta;
  sc.snapshot_stride = stride;
  sc.stepping = config.stepping;
  return solve(config.model, rho0, sc, stats);
}

template <class F>
auto stage(const std::string& name, const std::string& repro, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what(), repro);
  }
}

std::vector<int> nonzero_support(const Eigen::VectorXd& c) {
  std::vector<int> s;
  for (int i = 0; i < c.size(); ++i) {
    if (c[i] != 0.0) s.push_back(i);
  }
  return s;
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

void write_kernel_csv(const RunResult& r, const BasisSet& basis, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write " + path.string());
  f << std::setprecision(17);
  const RadialKernel truth = r.config.model.interaction_kernel().converted(basis.form());
  const auto to_vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  const RadialKernel est = basis.synthesize(to_vec(r.coefficients));
  const RadialKernel ls = basis.synthesize(to_vec(r.least_squares.c));
  const double rmax = r.config.dim == 1 ? r.config.R : r.config.R * std::sqrt(2.0);
  f << "r,true,estimate,least_squares\n";
  for (int k = 0; k <= 600; ++k) {
    const double x = rmax * k / 600.0;
    f << x << ',' << truth.profile(x) << ',' << est.profile(x) << ',' << ls.profile(x) << '\n';
  }
}

void write_coefficients_csv(const RunResult& r, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write " + path.string());
  f << std::setprecision(17) << "index,true,estimate,least_squares\n";
  for (int i = 0; i < r.coefficients.size(); ++i) {
    f << i + 1 << ',';
    if (r.truth) f << (*r.truth)[i];
    f << ',' << r.coefficients[i] << ',' << r.least_squares.c[i] << '\n';
  }
}

}  // namespace

DensityTrajectory simulate(const ExperimentConfig& config, SolveStats* stats) {
  return simulate_strided(config, 1, stats);
}

DensityTrajectory observations(const ExperimentConfig& config, const DensityTrajectory& fine) {
  const double ratio = config.observation_grid().dt() / fine.grid().dt();
  const int rt = static_cast<int>(std::lround(ratio));
  return observe(fine, config.cx, rt, config.noise);
}

LinearSystem assemble(const ExperimentConfig& config, const BasisSet& basis,
                      const DensityTrajectory& data) {
  if (config.assembly == "direct") return assemble_direct(basis, data, config.model);
  if (config.assembly == "via-G") return assemble_via_G(basis, assemble_G(data), data, config.model);
  throw InvalidParameter("unknown assembly path " + config.assembly);
}

SparseSolution sparse_solve(const ExperimentConfig& config, const LinearSystem& sys) {
  const GreedyOptions opt{.rel_tol = config.rel_tol};
  if (config.solver == "partinv") return partinv(sys.A, sys.b, config.K, opt);
  if (config.solver == "subspace-pursuit") return subspace_pursuit(sys.A, sys.b, config.K, opt);
  if (config.solver == "stls") return stls(sys.A, sys.b, config.stls_threshold, opt);
  if (config.solver == "least-squares") return least_squares(sys.A, sys.b, config.rel_tol);
  throw InvalidParameter("unknown solver " + config.solver);
}

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
  std::string repro = "aggdiff run --preset " + config.name;
  if (options.out) {
    fs::create_directories(*options.out);
    write_json(config.to_json(), *options.out / "config.json");
    repro = "aggdiff run --config " + (*options.out / "config.json").string();
  }
  if (options.cache) fs::create_directories(*options.cache);

  const BasisSet basis = stage("config", repro, [&] { return make_basis(config.basis); });

  bool sim_hit = false;
  const DensityTrajectory fine = stage("simulate", repro, [&] {
    const auto key = json_hash(simulation_key(config, config.ct));
    if (options.cache) {
      const fs::path p = *options.cache / ("sim-" + key + ".traj");
      if (fs::exists(p)) {
        sim_hit = true;
        return read_trajectory(p);
      }
      auto t = simulate_strided(config, config.ct, nullptr);
      write_trajectory(t, p);
      return t;
    }
    return simulate_strided(config, config.ct, nullptr);
  });

  DensityTrajectory data =
      stage("observe", repro, [&] { return observe(fine, config.cx, 1, config.noise); });

  bool sys_hit = false;
  LinearSystem sys = stage("assemble", repro, [&] {
    if (options.cache) {
      const fs::path p = *options.cache / ("sys-" + json_hash(system_key(config)) + ".bin");
      if (fs::exists(p)) {
        sys_hit = true;
        return read_system(p);
      }
      auto s = assemble(config, basis, data);
      write_system(s, p);
      return s;
    }
    return assemble(config, basis, data);
  });

  SparseSolution sol = stage("solve", repro, [&] { return sparse_solve(config, sys); });
  SparseSolution ls = stage("solve", repro, [&] { return least_squares(sys.A, sys.b, config.rel_tol); });

  RunResult r{.config = config,
              .data = std::move(data),
              .system = std::move(sys),
              .solution = std::move(sol),
              .least_squares = std::move(ls),
              .pruning = std::nullopt,
              .coefficients = {},
              .support = {},
              .truth = std::nullopt,
              .manifest = {}};
  r.cache_hit_data = sim_hit;
  r.cache_hit_system = sys_hit;
  r.coefficients = r.solution.c;
  r.support = r.solution.support;

  if (config.prune) {
    r.pruning = stage("prune", repro, [&] {
      return prune(r.system.A, r.system.b, r.solution.support, basis, config.model, r.data,
                   config.pruning);
    });
    r.coefficients = r.pruning->best().c;
    r.support = nonzero_support(r.coefficients);
  }

  stage("score", repro, [&] {
    const auto truth = true_coefficients(config.model.interaction_kernel(), basis,
                                         2.0 * config.R * (config.dim == 2 ? std::sqrt(2.0) : 1.0));
    if (truth) {
      r.truth = Eigen::Map<const Eigen::VectorXd>(truth->data(), static_cast<Eigen::Index>(truth->size()));
      r.reconstruction_error = reconstruction_error(*r.truth, r.coefficients);
      r.ls_reconstruction_error = reconstruction_error(*r.truth, r.least_squares.c);
    } else {
      r.reconstruction_error = std::numeric_limits<double>::quiet_NaN();
      r.ls_reconstruction_error = std::numeric_limits<double>::quiet_NaN();
    }
    r.coherence = coherence(r.system.A);
    return 0;
  });

  nlohmann::json support = nlohmann::json::array();
  for (int i : r.support) support.push_back(i + 1);
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  r.manifest = {
      {"config", config.to_json()},
      {"config_hash", config.hash()},
      {"repro", repro},
      {"data", {{"grid", r.data.grid().to_json()},
                {"provenance", r.data.provenance().to_json()},
                {"hash", bytes_hash(r.data.values())},
                {"cache_hit", sim_hit}}},
      {"system", {{"summary", r.system.to_json()}, {"hash", system_hash(r.system)}, {"cache_hit", sys_hit}}},
      {"solution", r.solution.to_json()},
      {"least_squares", r.least_squares.to_json()},
      {"estimate", {{"coefficients", std::vector<double>(r.coefficients.data(), r.coefficients.data() + r.coefficients.size())},
                    {"support", support}}},
      {"score",
       {{"reconstruction_error", num(r.reconstruction_error)},
        {"ls_reconstruction_error", num(r.ls_reconstruction_error)},
        {"ls_gap", num(r.ls_reconstruction_error / r.reconstruction_error)},
        {"coherence", r.coherence}}}};
  if (r.truth) {
    r.manifest["score"]["truth"] = std::vector<double>(r.truth->data(), r.truth->data() + r.truth->size());
  }
  if (r.pruning) r.manifest["pruning"] = r.pruning->to_json();

  if (options.out) {
    stage("export", repro, [&] {
      const fs::path& o = *options.out;
      write_system(r.system, o / "system.bin");
      write_json(r.solution.to_json(), o / "solution.json");
      if (r.pruning) r.pruning->write_csv(o / "pruning.csv");
      if (options.csv) {
        write_coefficients_csv(r, o / "coefficients.csv");
        write_kernel_csv(r, basis, o / "kernel.csv");
        write_coherence_csv(r.system.A, o / "coherence.csv");
        export_trajectory_csv(r.data, o / "data.csv");
      }
      write_json(r.manifest, o / "manifest.json");
      return 0;
    });
  }
  return r;
}

ExperimentConfig config_from_manifest(const fs::path& manifest) {
  std::ifstream f(manifest);
  if (!f) throw FormatError("cannot read " + manifest.string());
  const auto j = nlohmann::json::parse(f);
  return ExperimentConfig::from_json(j.contains("config") ? j.at("config") : j);
}

void NoiseSweep::write_csv(const fs::path& path) const {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write " + path.string());
  f << std::setprecision(17) << "percent,trials,mean,std,support_rate\n";
  for (const auto& r : rows) {
    f << r.percent << ',' << r.errors.size() << ',' << r.mean << ',' << r.stddev << ','
      << r.support_rate << '\n';
  }
}

NoiseSweep sweep_noise(const ExperimentConfig& config, const std::vector<double>& percents,
                       int trials, std::uint64_t base_seed, unsigned threads) {
  if (trials < 1) throw InvalidParameter("trials must be positive");
  const BasisSet basis = make_basis(config.basis);
  const auto truth_v = true_coefficients(config.model.interaction_kernel(), basis, 2.0 * config.R);
  if (!truth_v) throw InvalidInput("noise sweep needs a kernel inside the dictionary span");
  const Eigen::VectorXd truth =
      Eigen::Map<const Eigen::VectorXd>(truth_v->data(), static_cast<Eigen::Index>(truth_v->size()));
  const auto true_support = nonzero_support(truth);
  const DensityTrajectory fine = simulate_strided(config, config.ct, nullptr);

  struct Job {
    std::size_t row;
    int trial;
  };
  std::vector<Job> jobs;
  NoiseSweep out;
  out.base_seed = base_seed;
  for (std::size_t k = 0; k < percents.size(); ++k) {
    out.rows.push_back({.percent = percents[k], .errors = std::vector<double>(static_cast<std::size_t>(trials))});
    for (int i = 0; i < trials; ++i) jobs.push_back({k, i});
  }
  std::vector<char> hit(jobs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        const auto [k, i] = jobs[j];
        const NoiseSpec spec{out.rows[k].percent, base_seed ^ static_cast<std::uint64_t>(i)};
        const auto data = observe(fine, config.cx, 1, spec);
        const auto sys = assemble(config, basis, data);
        const auto sol = sparse_solve(config, sys);
        out.rows[k].errors[static_cast<std::size_t>(i)] = reconstruction_error(truth, sol.c);
        hit[j] = sol.support == true_support;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (hit[j]) out.rows[jobs[j].row].support_rate += 1.0 / trials;
  }
  for (auto& r : out.rows) {
    r.mean = std::accumulate(r.errors.begin(), r.errors.end(), 0.0) / trials;
    double ss = 0.0;
    for (double e : r.errors) ss += (e - r.mean) * (e - r.mean);
    r.stddev = trials > 1 ? std::sqrt(ss / (trials - 1)) : 0.0;
  }
  return out;
}

std::vector<MeshSweepRow> sweep_mesh(const ExperimentConfig& config, const std::vector<int>& cx,
                                     const std::vector<int>& ct) {
  const BasisSet basis = make_basis(config.basis);
  const auto truth_v = true_coefficients(config.model.interaction_kernel(), basis, 2.0 * config.R);
  if (!truth_v) throw InvalidInput("mesh sweep needs a kernel inside the dictionary span");
  const Eigen::VectorXd truth =
      Eigen::Map<const Eigen::VectorXd>(truth_v->data(), static_cast<Eigen::Index>(truth_v->size()));
  int stride = 0;
  for (int t : ct) stride = std::gcd(stride, t);
  const DensityTrajectory fine = simulate_strided(config, stride, nullptr);
  std::vector<MeshSweepRow> rows;
  for (int a : cx) {
    for (int t : ct) {
      ExperimentConfig c = config;
      c.cx = a;
      c.ct = t;
      c.noise.percent = 0.0;
      const auto data = observe(fine, a, t / stride, c.noise);
      const auto sol = sparse_solve(c, assemble(c, basis, data));
      rows.push_back({a, t, data.grid().step(0), data.grid().dt(), reconstruction_error(truth, sol.c),
                      sol.support});
    }
  }
  return rows;
}

void write_mesh_csv(const std::vector<MeshSweepRow>& rows, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write " + path.string());
  f << std::setprecision(17) << "cx,ct,dx,dt,reconstruction_error,support\n";
  for (const auto& r : rows) {
    f << r.cx << ',' << r.ct << ',' << r.dx << ',' << r.dt << ',' << r.reconstruction_error << ",\"";
    for (std::size_t i = 0; i < r.support.size(); ++i) f << (i ? " " : "") << r.support[i] + 1;
    f << "\"\n";
  }
}

void write_coherence_csv(const Eigen::MatrixXd& A, const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write " + path.string());
  f << std::setprecision(17);
  const Eigen::Index n = A.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double den = std::sqrt(A.col(i).squaredNorm() * A.col(j).squaredNorm());
      f << (den > 0.0 ? std::abs(A.col(i).dot(A.col(j))) / den : 0.0) << (j + 1 < n ? "," : "\n");
    }
  }
}

}  // namespace aggdiff
