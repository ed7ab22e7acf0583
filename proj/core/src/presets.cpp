#include "aggdiff/presets.hpp"

#include <cmath>
#include <numbers>

#include "aggdiff/errors.hpp"
#include "aggdiff/hashing.hpp"

namespace aggdiff {

Grid ExperimentConfig::solver_grid() const {
  return dim == 1 ? Grid::make_1d(R, dx, dt, T) : Grid::make_2d(R, R, dx, dx, dt, T);
}

Grid ExperimentConfig::observation_grid() const { return solver_grid().coarsened(cx, ct); }

nlohmann::json ExperimentConfig::to_json() const {
  const auto& tc = pruning.tee;
  return {{"name", name},
          {"model", model.to_json()},
          {"initial", initial},
          {"grid", {{"dim", dim}, {"R", R}, {"dx", dx}, {"dt", dt}, {"T", T}}},
          {"data",
           {{"analytic", analytic},
            {"stepping", stepping == SolverConfig::Stepping::fixed ? "fixed" : "adaptive"},
            {"cfl_safety", cfl_safety},
            {"theta", theta},
            {"cx", cx},
            {"ct", ct},
            {"noise_percent", noise.percent},
            {"seed", noise.seed}}},
          {"basis", basis},
          {"assembly", assembly},
          {"solver", {{"name", solver}, {"K", K}, {"stls_threshold", stls_threshold}, {"rel_tol", rel_tol}}},
          {"pruning",
           {{"enabled", prune},
            {"tau_rel", pruning.tau_rel},
            {"tee_all", pruning.tee_all},
            {"fine_dx", tc.fine_dx},
            {"fine_dt", tc.fine_dt},
            {"horizon_steps", tc.horizon_steps},
            {"cfl_safety", tc.cfl_safety}}}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.name = j.value("name", std::string("custom"));
  c.model = ModelSpec::from_json(j.at("model"));
  c.initial = j.at("initial");
  const auto& g = j.at("grid");
  c.dim = g.value("dim", 1);
  c.R = g.at("R").get<double>();
  c.dx = g.at("dx").get<double>();
  c.dt = g.at("dt").get<double>();
  c.T = g.at("T").get<double>();
  const auto d = j.value("data", nlohmann::json::object());
  c.analytic = d.value("analytic", false);
  const auto stepping = d.value("stepping", std::string("fixed"));
  if (stepping != "fixed" && stepping != "adaptive") throw FormatError("unknown stepping " + stepping);
  c.stepping = stepping == "fixed" ? SolverConfig::Stepping::fixed : SolverConfig::Stepping::adaptive;
  c.cfl_safety = d.value("cfl_safety", 0.9);
  c.theta = d.value("theta", 1.5);
  c.cx = d.value("cx", 1);
  c.ct = d.value("ct", 1);
  c.noise.percent = d.value("noise_percent", 0.0);
  c.noise.seed = d.value("seed", std::uint64_t{0});
  c.basis = j.at("basis");
  c.assembly = j.value("assembly", std::string("direct"));
  const auto s = j.value("solver", nlohmann::json::object());
  c.solver = s.value("name", std::string("partinv"));
  c.K = s.value("K", 1);
  c.stls_threshold = s.value("stls_threshold", 0.1);
  c.rel_tol = s.value("rel_tol", 1e-12);
  const auto p = j.value("pruning", nlohmann::json::object());
  c.prune = p.value("enabled", false);
  c.pruning.tau_rel = p.value("tau_rel", 0.2);
  c.pruning.tee_all = p.value("tee_all", false);
  c.pruning.rel_tol = c.rel_tol;
  c.pruning.tee.fine_dx = p.value("fine_dx", c.dx);
  c.pruning.tee.fine_dt = p.value("fine_dt", c.dt);
  c.pruning.tee.horizon_steps = p.value("horizon_steps", 10);
  c.pruning.tee.cfl_safety = p.value("cfl_safety", 0.9);
  if (c.dim != 1 && c.dim != 2) throw FormatError("grid dim must be 1 or 2");
  return c;
}

std::string ExperimentConfig::hash() const { return json_hash(to_json()); }

BasisSet make_basis(const nlohmann::json& spec) {
  const auto family = spec.at("family").get<std::string>();
  const auto form = kernel_form_from_string(spec.value("form", std::string("kernel")));
  if (family == "piecewise") {
    return basis_piecewise(spec.at("n").get<int>(), spec.value("degree", 0),
                           spec.value("domain_end", 6.0), form);
  }
  if (family == "polynomial") {
    return basis_polynomial(spec.at("n").get<int>(), spec.at("scale").get<double>(), form);
  }
  if (family == "gaussian") {
    std::vector<double> w;
    if (spec.contains("weights")) {
      w = spec.at("weights").get<std::vector<double>>();
    } else {
      w = linspace_step(spec.at("from").get<double>(), spec.at("step").get<double>(),
                        spec.at("to").get<double>());
    }
    const auto variant = spec.value("variant", std::string("scaled_linear"));
    if (variant == "scaled_linear") return basis_gaussian(w, GaussianForm::scaled_linear);
    if (variant == "scaled_derivative") return basis_gaussian(w, GaussianForm::scaled_derivative);
    throw FormatError("unknown gaussian variant " + variant);
  }
  throw FormatError("unknown basis family " + family);
}

std::vector<double> initial_slice(const nlohmann::json& spec, const Grid& grid) {
  std::vector<double> rho(grid.nodes_per_slice(), 0.0);
  const auto kind = spec.at("kind").get<std::string>();
  const int Nx = grid.active_half_count(0), Ny = grid.active_half_count(1);
  for (int mx = -Nx; mx <= Nx; ++mx) {
    for (int my = -Ny; my <= Ny; ++my) {
      const double x = grid.x(mx), y = grid.dim() == 2 ? grid.y(my) : 0.0;
      double v = 0.0;
      if (kind == "indicator") {
        const double h = grid.step(0);
        const double lo = std::max(x - 0.5 * h, spec.at("lo").get<double>());
        const double hi = std::min(x + 0.5 * h, spec.at("hi").get<double>());
        v = std::max(hi - lo, 0.0) / h * spec.value("height", 1.0);
      } else if (kind == "gaussian_mixture") {
        for (const auto& c : spec.at("components")) {
          const double sd = c.at("sd").get<double>();
          const double z = (x - c.at("mean").get<double>()) / sd;
          v += c.value("weight", 1.0) * std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
        }
      } else if (kind == "gaussian_bumps_2d") {
        const double amp = spec.value("amplitude", 1.0);
        const double div = spec.value("divisor", 1.0);
        const double width = spec.value("width", 1.0);
        for (const auto& c : spec.at("centers")) {
          const double ux = x - c.at(0).get<double>(), uy = y - c.at(1).get<double>();
          v += amp * std::exp(-(ux * ux + uy * uy) / width) / div;
        }
      } else if (kind == "paraboloid") {
        const double r2 = x * x + y * y;
        v = std::max(spec.at("height").get<double>() - spec.value("curvature", 1.0) * r2, 0.0);
      } else {
        throw FormatError("unknown initial datum kind " + kind);
      }
      rho[grid.flat(mx, my)] = v;
    }
  }
  return rho;
}

namespace {

ModelSpec example1_model() {
  ModelSpec m;
  m.diffusion = DiffusionLaw::power(0.2, 2.0);
  m.confinement = PotentialFn::zero();
  m.interaction = RadialKernel(KernelForm::kernel, {{5.0, RadialAtom{0, 0.0, 0.0, 1.0}}}, -5.0,
                               "-5(1-|x|)_+");
  return m;
}

ModelSpec example2_model() {
  const double pi = std::numbers::pi;
  ModelSpec m;
  m.diffusion = DiffusionLaw::power(0.48, 3.0);
  m.confinement = PotentialFn::zero();
  m.interaction = RadialKernel(KernelForm::kernel,
                               {{4.0 / std::sqrt(pi), RadialAtom{1, 1.0}},
                                {2.0 / std::sqrt(2.0 * pi), RadialAtom{1, 0.5}}},
                               -2.0 / std::sqrt(pi) - 2.0 / std::sqrt(2.0 * pi), "gaussian sum");
  return m;
}

ModelSpec example3_model() {
  ModelSpec m;
  m.diffusion = DiffusionLaw::linear(0.1);
  m.confinement = PotentialFn::double_well();
  m.interaction = RadialKernel(KernelForm::kernel, {{1.0, RadialAtom{1, 0.0}}}, 0.0, "|x|^2/2");
  return m;
}

ModelSpec example4_model() {
  ModelSpec m;
  m.diffusion = DiffusionLaw::power(1.0, 2.0);
  m.confinement = PotentialFn::zero();
  m.interaction = RadialKernel(KernelForm::kernel_over_r, {{1.0, RadialAtom{0, 0.0}}}, 0.0, "|x|^2/2");
  return m;
}

ModelSpec example5_model() {
  ModelSpec m;
  m.diffusion = DiffusionLaw::power(1.0, 2.0);
  m.confinement = PotentialFn::zero();
  m.interaction = RadialKernel(KernelForm::kernel_over_r, {{12.0, RadialAtom{0, 2.0}}}, -3.0,
                               "-3exp(-2|x|^2)");
  return m;
}

ExperimentConfig example1() {
  ExperimentConfig c;
  c.name = "example1";
  c.model = example1_model();
  c.initial = {{"kind", "indicator"}, {"lo", -2.0}, {"hi", 2.0}};
  c.R = 6.0;
  c.dx = 1e-2;
  c.dt = 0.5e-4;
  c.T = 0.5;
  // The table step exceeds the explicit diffusion bound once the aggregates sharpen.
  c.stepping = SolverConfig::Stepping::adaptive;
  c.cx = 6;
  c.ct = 50;
  c.basis = {{"family", "piecewise"}, {"n", 12}, {"degree", 0}, {"domain_end", 6.0}};
  c.K = 2;
  c.noise.seed = 20240501;
  return c;
}

ExperimentConfig example1_linear() {
  ExperimentConfig c = example1();
  c.name = "example1-linear";
  c.basis["degree"] = 1;
  c.K = 3;
  c.prune = true;
  c.pruning.tee.fine_dx = c.dx / 2;
  c.pruning.tee.fine_dt = c.dt / 4;
  c.pruning.tee.horizon_steps = 10;
  return c;
}

ExperimentConfig example2() {
  ExperimentConfig c;
  c.name = "example2";
  c.model = example2_model();
  c.initial = {{"kind", "gaussian_mixture"},
               {"components",
                {{{"mean", 1.0}, {"sd", 0.5}, {"weight", 0.5}},
                 {{"mean", -1.0}, {"sd", 0.5}, {"weight", 0.5}}}}};
  c.R = 6.0;
  c.dx = 1.25e-2;
  c.dt = 1e-4;
  c.T = 1.5;
  c.cx = 5;
  c.ct = 2500;
  c.basis = {{"family", "gaussian"}, {"from", 0.5}, {"step", 0.5}, {"to", 5.0}, {"variant", "scaled_linear"}};
  c.K = 2;
  c.noise.seed = 20240502;
  return c;
}

ExperimentConfig example3() {
  ExperimentConfig c;
  c.name = "example3";
  c.model = example3_model();
  c.initial = {{"kind", "gaussian_mixture"},
               {"components", {{{"mean", 0.0}, {"sd", 0.3}, {"weight", 1.0}}}}};
  c.R = 6.0;
  c.dx = 1.2e-2;
  c.dt = 1e-2;
  c.T = 5.0;
  // The table step is far above the CFL bound set by V' near the walls.
  c.stepping = SolverConfig::Stepping::adaptive;
  c.cx = 5;
  c.ct = 5;
  c.basis = {{"family", "polynomial"}, {"n", 10}, {"scale", 6.0}};
  c.K = 3;
  c.noise.seed = 20240503;
  return c;
}

ExperimentConfig example3_noisy() {
  ExperimentConfig c = example3();
  c.name = "example3-noisy";
  c.noise.percent = 0.5;
  c.K = 2;
  c.prune = true;
  c.pruning.tee.fine_dx = c.dx;
  c.pruning.tee.fine_dt = 0.1 * c.dt;
  c.pruning.tee.horizon_steps = 2;
  return c;
}

ExperimentConfig example4() {
  ExperimentConfig c;
  c.name = "example4";
  c.model = example4_model();
  // Mass 4, which makes the paraboloid stationary for this model.
  c.initial = {{"kind", "paraboloid"}, {"height", std::sqrt(8.0 / std::numbers::pi)}};
  c.dim = 2;
  c.R = 2.0;
  c.dx = 4.0 / 40.0;
  c.dt = 1e-2;
  c.T = 0.1;
  c.analytic = true;
  c.basis = {{"family", "polynomial"}, {"n", 10}, {"scale", 2.0}, {"form", "kernel_over_r"}};
  c.K = 1;
  c.noise.seed = 20240504;
  return c;
}

ExperimentConfig example5() {
  ExperimentConfig c;
  c.name = "example5";
  c.model = example5_model();
  c.initial = {{"kind", "gaussian_bumps_2d"},
               {"amplitude", 5.0},
               {"divisor", 0.2},
               {"width", 1.0},
               {"centers", {{-0.5, -0.5}, {0.5, 0.5}}}};
  c.dim = 2;
  c.R = 2.1;
  c.dx = 0.2;
  c.dt = 1e-3;
  c.T = 0.05;
  // Peak density 25 puts the explicit diffusion bound near 2e-4.
  c.stepping = SolverConfig::Stepping::adaptive;
  c.basis = {{"family", "gaussian"}, {"from", 1.0}, {"step", 1.0}, {"to", 10.0}, {"variant", "scaled_derivative"}};
  c.K = 2;
  c.prune = true;
  c.pruning.tee.fine_dx = 0.1;
  c.pruning.tee.fine_dt = 1e-4;
  c.pruning.tee.horizon_steps = 10;
  c.noise.seed = 20240505;
  return c;
}

ExperimentConfig desk(ExperimentConfig c) {
  c.name += "-desk";
  if (c.name.starts_with("example1")) {
    c.dx = 2e-2;
    c.dt = 1e-4;
    c.cx = 3;
    c.ct = 25;
    if (c.prune) {
      c.pruning.tee.fine_dx = c.dx / 2;
      c.pruning.tee.fine_dt = c.dt / 4;
    }
  } else if (c.name.starts_with("example2")) {
    c.dx = 2.5e-2;
    c.dt = 2e-4;
    c.cx = 5;
    c.ct = 1250;
  } else if (c.name.starts_with("example3")) {
    c.dx = 2e-2;
    c.cx = 3;
    if (c.prune) c.pruning.tee.fine_dx = c.dx;
  }
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> base{"example1", "example1-linear", "example2", "example3",
                                "example3-noisy", "example4", "example5"};
  std::vector<std::string> out = base;
  for (const auto& b : base) out.push_back(b + "-desk");
  return out;
}

ExperimentConfig preset(const std::string& name) {
  std::string base = name;
  const bool is_desk = name.ends_with("-desk");
  if (is_desk) base = name.substr(0, name.size() - 5);
  ExperimentConfig c;
  if (base == "example1") c = example1();
  else if (base == "example1-linear") c = example1_linear();
  else if (base == "example2") c = example2();
  else if (base == "example3") c = example3();
  else if (base == "example3-noisy") c = example3_noisy();
  else if (base == "example4") c = example4();
  else if (base == "example5") c = example5();
  else throw InvalidParameter("unknown preset '" + name + "'");
  return is_desk ? desk(std::move(c)) : c;
}

}  // namespace aggdiff
