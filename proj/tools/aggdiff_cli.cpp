#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aggdiff/assembly.hpp"
#include "aggdiff/data_pipeline.hpp"
#include "aggdiff/errors.hpp"
#include "aggdiff/metrics.hpp"
#include "aggdiff/pipeline.hpp"
#include "aggdiff/presets.hpp"
#include "aggdiff/pruning.hpp"
#include "aggdiff/sparse_solvers.hpp"

namespace fs = std::filesystem;
using namespace aggdiff;

namespace {

struct Source {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;

  void attach(CLI::App* app) {
    auto* p = app->add_option("--preset", preset, "Preset name (see `aggdiff preset list`)");
    auto* c = app->add_option("--config", config, "JSON config or run manifest")->check(CLI::ExistingFile);
    p->excludes(c);
    app->add_option("--seed", seed, "Noise seed");
    app->add_option("--noise", noise, "Noise level in percent");
  }

  ExperimentConfig load() const {
    ExperimentConfig c;
    if (!preset.empty()) {
      c = aggdiff::preset(preset);
    } else if (!config.empty()) {
      c = config_from_manifest(config);
    } else {
      throw InvalidParameter("one of --preset or --config is required");
    }
    if (seed) c.noise.seed = *seed;
    if (noise) c.noise.percent = *noise;
    return c;
  }
};

int exit_code(const std::string& stage) {
  static const std::map<std::string, int> codes{
      {"config", 2},   {"simulate", 3}, {"observe", 4}, {"assemble", 5}, {"solve", 6},
      {"prune", 7},    {"score", 8},    {"export", 9},  {"format", 10},  {"invalid-parameter", 11},
      {"invalid-input", 12}, {"index-alignment", 13}, {"solver-diverged", 14},
      {"positivity-loss", 15}, {"budget", 16}};
  const auto it = codes.find(stage);
  return it == codes.end() ? 1 : it->second;
}

std::vector<int> parse_support(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    const int v = std::stoi(tok);
    if (v < 1) throw InvalidParameter("support indices are 1-based");
    out.push_back(v - 1);
  }
  return out;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

std::vector<double> load_coefficients(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw FormatError("cannot read " + p.string());
  const auto j = nlohmann::json::parse(f);
  if (j.contains("estimate")) return j.at("estimate").at("coefficients").get<std::vector<double>>();
  return j.at("coefficients").get<std::vector<double>>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn interaction kernels of aggregation-diffusion equations from density data"};
  app.require_subcommand(1);

  auto* preset_cmd = app.add_subcommand("preset", "Inspect experiment presets");
  preset_cmd->require_subcommand(1);
  preset_cmd->add_subcommand("list", "List preset names");
  auto* show = preset_cmd->add_subcommand("show", "Print a preset as JSON");
  std::string show_name;
  show->add_option("name", show_name)->required();

  auto* sim = app.add_subcommand("simulate", "Generate observations (solver or analytic data)");
  Source sim_src;
  sim_src.attach(sim);
  std::string sim_out = "data.traj";
  bool sim_raw = false, sim_csv = false;
  sim->add_option("--out", sim_out, "Trajectory file");
  sim->add_flag("--raw", sim_raw, "Keep the solver mesh (no downsampling or noise)");
  sim->add_flag("--csv", sim_csv, "Also write <out>.csv");

  auto* asmb = app.add_subcommand("assemble", "Build the regression system from observations");
  Source asm_src;
  asm_src.attach(asmb);
  std::string asm_data, asm_out = "system.bin", asm_path;
  asmb->add_option("--data", asm_data, "Observation trajectory")->required()->check(CLI::ExistingFile);
  asmb->add_option("--out", asm_out, "System file");
  asmb->add_option("--path", asm_path, "direct or via-G")->check(CLI::IsMember({"direct", "via-G"}));

  auto* slv = app.add_subcommand("solve", "Sparse solve of a stored system");
  std::string slv_sys, slv_solver = "partinv", slv_out;
  int slv_k = 1;
  double slv_thr = 0.1, slv_tol = 1e-12;
  slv->add_option("--system", slv_sys)->required()->check(CLI::ExistingFile);
  slv->add_option("--solver", slv_solver)
      ->check(CLI::IsMember({"partinv", "subspace-pursuit", "stls", "least-squares"}));
  slv->add_option("-K,--sparsity", slv_k);
  slv->add_option("--threshold", slv_thr, "STLS threshold");
  slv->add_option("--rel-tol", slv_tol);
  slv->add_option("--out", slv_out, "Solution JSON");

  auto* prn = app.add_subcommand("prune", "Pruning table over a candidate support");
  Source prn_src;
  prn_src.attach(prn);
  std::string prn_sys, prn_data, prn_support, prn_out = "pruning";
  prn->add_option("--system", prn_sys)->required()->check(CLI::ExistingFile);
  prn->add_option("--data", prn_data)->required()->check(CLI::ExistingFile);
  prn->add_option("--support", prn_support, "1-based indices, e.g. 1,2,3")->required();
  prn->add_option("--out", prn_out, "Output prefix (.csv and .json)");

  auto* scr = app.add_subcommand("score", "Compare estimated coefficients with the true kernel");
  Source scr_src;
  scr_src.attach(scr);
  std::string scr_sol, scr_data;
  scr->add_option("--solution", scr_sol, "solution.json or manifest.json")->required()->check(CLI::ExistingFile);
  scr->add_option("--data", scr_data, "Observations for the error functional")->check(CLI::ExistingFile);

  auto* swp = app.add_subcommand("sweep", "Parameter sweeps");
  swp->require_subcommand(1);
  auto* swn = swp->add_subcommand("noise", "Reconstruction error versus noise level");
  Source swn_src;
  swn_src.attach(swn);
  std::vector<double> swn_p{0, 1, 2, 3, 5};
  int swn_trials = 20;
  unsigned swn_threads = 0;
  std::string swn_out = "noise_sweep.csv";
  swn->add_option("--percents", swn_p)->delimiter(',');
  swn->add_option("--trials", swn_trials);
  swn->add_option("--threads", swn_threads);
  swn->add_option("--out", swn_out);
  auto* swm = swp->add_subcommand("mesh", "Reconstruction error over downsampling factors");
  Source swm_src;
  swm_src.attach(swm);
  std::vector<int> swm_cx{1, 2, 3, 6}, swm_ct{10, 25, 50};
  std::string swm_out = "mesh_sweep.csv";
  swm->add_option("--cx", swm_cx)->delimiter(',');
  swm->add_option("--ct", swm_ct)->delimiter(',');
  swm->add_option("--out", swm_out);
  auto* sws = swp->add_subcommand("stability", "Trajectory distance versus kernel perturbation");
  Source sws_src;
  sws_src.attach(sws);
  std::vector<double> sws_eps{1e-3, 1e-2, 5e-2, 1e-1};
  std::string sws_kind = "interaction", sws_out = "stability.csv";
  sws->add_option("--eps", sws_eps)->delimiter(',');
  sws->add_option("--perturb", sws_kind)->check(CLI::IsMember({"interaction", "confinement"}));
  sws->add_option("--out", sws_out);

  auto* rn = app.add_subcommand("run", "Full pipeline with manifest and artifacts");
  Source rn_src;
  rn_src.attach(rn);
  std::string rn_out = "out", rn_cache;
  bool rn_no_csv = false;
  rn->add_option("--out", rn_out, "Artifact directory");
  rn->add_option("--cache", rn_cache, "Cache directory for trajectories and systems");
  rn->add_flag("--no-csv", rn_no_csv, "Skip the plot CSV files");

  CLI11_PARSE(app, argc, argv);

  std::string current = "config";
  try {
    if (preset_cmd->parsed()) {
      if (preset_cmd->got_subcommand("list")) {
        for (const auto& n : preset_names()) std::cout << n << '\n';
      } else {
        print_json(preset(show_name).to_json());
      }
    } else if (sim->parsed()) {
      const auto cfg = sim_src.load();
      current = "simulate";
      SolveStats stats;
      auto fine = simulate(cfg, &stats);
      current = "observe";
      auto data = sim_raw ? std::move(fine) : observations(cfg, fine);
      current = "export";
      write_trajectory(data, sim_out);
      if (sim_csv) export_trajectory_csv(data, sim_out + ".csv");
      std::cerr << "wrote " << sim_out << " (" << data.time_slices() << " slices, " << stats.substeps
                << " solver steps)\n";
    } else if (asmb->parsed()) {
      auto cfg = asm_src.load();
      if (!asm_path.empty()) cfg.assembly = asm_path;
      current = "assemble";
      const auto data = read_trajectory(asm_data);
      const auto sys = assemble(cfg, make_basis(cfg.basis), data);
      write_system(sys, asm_out);
      print_json(sys.to_json());
    } else if (slv->parsed()) {
      current = "solve";
      ExperimentConfig cfg;
      cfg.solver = slv_solver;
      cfg.K = slv_k;
      cfg.stls_threshold = slv_thr;
      cfg.rel_tol = slv_tol;
      const auto sol = sparse_solve(cfg, read_system(slv_sys));
      if (!slv_out.empty()) {
        std::ofstream(slv_out) << sol.to_json().dump(2) << '\n';
      }
      print_json(sol.to_json());
    } else if (prn->parsed()) {
      const auto cfg = prn_src.load();
      current = "prune";
      const auto sys = read_system(prn_sys);
      const auto data = read_trajectory(prn_data);
      const auto report = prune(sys.A, sys.b, parse_support(prn_support), make_basis(cfg.basis), cfg.model,
                                data, cfg.pruning);
      current = "export";
      report.write_csv(prn_out + ".csv");
      std::ofstream(prn_out + ".json") << report.to_json().dump(2) << '\n';
      print_json(report.to_json());
    } else if (scr->parsed()) {
      const auto cfg = scr_src.load();
      current = "score";
      const auto basis = make_basis(cfg.basis);
      const auto c = load_coefficients(scr_sol);
      if (c.size() != basis.size()) throw InvalidInput("coefficient count does not match the dictionary");
      const Eigen::VectorXd est = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
      nlohmann::json out{{"coefficients", c}};
      const auto truth = true_coefficients(cfg.model.interaction_kernel(), basis, 2.0 * cfg.R);
      if (truth) {
        const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(truth->data(), static_cast<Eigen::Index>(truth->size()));
        out["truth"] = *truth;
        out["reconstruction_error"] = reconstruction_error(t, est);
      }
      if (!scr_data.empty()) {
        const auto data = read_trajectory(scr_data);
        out["error_functional"] = error_functional(basis.synthesize(c),
                                                   cfg.model.interaction_kernel().converted(basis.form()), data);
      }
      print_json(out);
    } else if (swn->parsed()) {
      const auto cfg = swn_src.load();
      current = "sweep";
      const auto sweep = sweep_noise(cfg, swn_p, swn_trials, cfg.noise.seed, swn_threads);
      sweep.write_csv(swn_out);
      for (const auto& r : sweep.rows) {
        std::cout << "p=" << r.percent << "% mean=" << r.mean << " std=" << r.stddev
                  << " support_rate=" << r.support_rate << '\n';
      }
    } else if (swm->parsed()) {
      const auto cfg = swm_src.load();
      current = "sweep";
      const auto rows = sweep_mesh(cfg, swm_cx, swm_ct);
      write_mesh_csv(rows, swm_out);
      for (const auto& r : rows) {
        std::cout << "dx=" << r.dx << " dt=" << r.dt << " error=" << r.reconstruction_error << '\n';
      }
    } else if (sws->parsed()) {
      const auto cfg = sws_src.load();
      current = "sweep";
      const Grid grid = cfg.solver_grid();
      SolverConfig sc{.grid = grid,
                      .cfl_safety = cfg.cfl_safety,
                      .theta = cfg.theta,
                      .snapshot_stride = cfg.ct,
                      .stepping = cfg.stepping};
      const auto sweep = stability_sweep(cfg.model, initial_slice(cfg.initial, grid), sc, sws_eps,
                                         sws_kind == "interaction" ? Perturbation::interaction
                                                                   : Perturbation::confinement);
      sweep.write_csv(sws_out);
      for (const auto& p : sweep.probes) {
        std::cout << "eps=" << p.epsilon << " E=" << p.error_functional << " sup_d2^2=" << p.sup_d2_squared
                  << '\n';
      }
      std::cout << "monotone=" << sweep.monotone << " rank_consistent=" << sweep.rank_consistent << '\n';
    } else if (rn->parsed()) {
      const auto cfg = rn_src.load();
      RunOptions opt;
      opt.out = rn_out;
      if (!rn_cache.empty()) opt.cache = rn_cache;
      opt.csv = !rn_no_csv;
      const auto r = run(cfg, opt);
      std::cout << r.manifest.at("estimate").dump() << '\n' << r.manifest.at("score").dump() << '\n';
    }
  } catch (const Error& e) {
    const auto& tag = e.stage();
    std::cerr << "error [" << tag << "]: " << e.what() << '\n';
    return exit_code(tag == "invalid-parameter" || tag == "format" ? tag : (current == "config" ? tag : current));
  } catch (const std::exception& e) {
    std::cerr << "error [" << current << "]: " << e.what() << '\n';
    return exit_code(current);
  }
  return 0;
}
