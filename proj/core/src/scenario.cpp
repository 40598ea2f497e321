#include "pfgl/scenario.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "pfgl/vtk.hpp"

namespace pfgl {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

BCSpec parse_bc(const std::string& text) {
  const auto tk = tokens(text);
  require(tk.size() >= 3, "bc spec '", text, "': expected <selector> <comp> <motion>");
  BCSpec bc;
  std::size_t consumed;
  if (tk[0] == "seg") {
    require(tk.size() >= 8, "bc spec '", text, "': seg needs <ax> <v> <ax> <a> <b>");
    bc.selector = tk[0] + " " + tk[1] + " " + tk[2] + " " + tk[3] + " " + tk[4] + " " + tk[5];
    consumed = 6;
  } else {
    require(tk[0] == "bottom" || tk[0] == "top" || tk[0] == "left" || tk[0] == "right",
            "bc spec '", text, "': unknown selector '", tk[0], "'");
    bc.selector = tk[0];
    consumed = 1;
  }
  const std::string comp = tk[consumed], motion = tk[consumed + 1];
  if (comp == "x") bc.comp = 0;
  else if (comp == "y") bc.comp = 1;
  else if (comp == "both") bc.comp = -1;
  else fail("bc spec '", text, "': component must be x|y|both");
  if (motion == "fixed") bc.scale = 0;
  else if (motion == "drive") bc.scale = 1;
  else if (motion == "drive_neg") bc.scale = -1;
  else fail("bc spec '", text, "': motion must be fixed|drive|drive_neg");
  require(!(bc.scale != 0 && bc.comp == -1), "bc spec '", text,
          "': driven constraints need a single component");
  return bc;
}

std::vector<int> select_nodes(const QuadMesh& mesh, const std::string& selector,
                              const QuadMesh& domain) {
  Vec2 lo = domain.nodes.front(), hi = domain.nodes.front();
  for (const auto& p : domain.nodes) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double tol = 1e-6 * (hi - lo).norm();
  auto on = [&](double v, double target) { return std::abs(v - target) <= tol; };

  std::vector<int> out;
  const auto tk = tokens(selector);
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    const Vec2& p = mesh.nodes[n];
    bool take = false;
    if (tk[0] == "bottom") take = on(p.y(), lo.y());
    else if (tk[0] == "top") take = on(p.y(), hi.y());
    else if (tk[0] == "left") take = on(p.x(), lo.x());
    else if (tk[0] == "right") take = on(p.x(), hi.x());
    else if (tk[0] == "seg") {
      const double v = std::stod(tk[2]), a = std::stod(tk[4]), b = std::stod(tk[5]);
      const double fixc = tk[1] == "x" ? p.x() : p.y();
      const double rngc = tk[3] == "x" ? p.x() : p.y();
      take = on(fixc, v) && rngc >= a - tol && rngc <= b + tol;
    }
    if (take) out.push_back(n);
  }
  return out;
}

std::vector<int> notch_adjacent_elements(const QuadMesh& mesh,
                                         const std::vector<SeamSpec>& seams) {
  const double tol = 1e-9 * std::max(mesh.diameter(), 1.0);
  std::set<int> out;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    Vec2 blo = mesh.nodes[mesh.elements[e][0]], bhi = blo;
    for (int k = 1; k < 4; ++k) {
      blo = blo.cwiseMin(mesh.nodes[mesh.elements[e][k]]);
      bhi = bhi.cwiseMax(mesh.nodes[mesh.elements[e][k]]);
    }
    for (const auto& s : seams) {
      if (s.yline < blo.y() - tol || s.yline > bhi.y() + tol) continue;
      if (bhi.x() < s.x0 - tol || blo.x() > s.x1 + tol) continue;
      out.insert(e);
    }
  }
  return {out.begin(), out.end()};
}

void write_series_csv(const std::string& path, const std::vector<SeriesRow>& rows) {
  std::ofstream f(path);
  f << std::setprecision(17);
  f << "step,ubar_mm,reaction_kN,strain_energy_kNmm,fracture_energy_kNmm,active_dofs\n";
  for (const auto& r : rows)
    f << r.step << "," << r.ubar << "," << r.reaction << "," << r.strain_energy << ","
      << r.fracture_energy << "," << r.active_dofs << "\n";
}

void write_timing_csv(const std::string& path, const std::vector<SeriesRow>& rows) {
  std::ofstream f(path);
  f << std::setprecision(6);
  f << "step,wall_ms\n";
  for (const auto& r : rows) f << r.step << "," << r.wall_ms << "\n";
}

void write_gl_log_csv(const std::string& path, const std::vector<GLLogRow>& rows) {
  std::ofstream f(path);
  f << std::setprecision(17);
  f << "step,k,du_gamma_rel,dlambda_rel,stagger_sweeps\n";
  for (const auto& r : rows)
    f << r.step << "," << r.k << "," << r.du_gamma_rel << "," << r.dlambda_rel << ","
      << r.stagger_sweeps << "\n";
}

void write_adapt_csv(const std::string& path, const std::vector<AdaptEvent>& events) {
  std::ofstream f(path);
  f << "step,cycle,n_promoted,local_dofs_after,promoted_ids\n";
  for (const auto& ev : events) {
    f << ev.step << "," << ev.cycle << "," << ev.promoted.size() << ","
      << ev.local_dofs_after << ",";
    for (std::size_t i = 0; i < ev.promoted.size(); ++i)
      f << (i ? " " : "") << ev.promoted[i];
    f << "\n";
  }
}

struct Logger {
  int level = 1;
  template <typename... Args>
  void info(Args&&... args) const {
    if (level >= 1) {
      (std::cout << ... << args) << "\n";
    }
  }
  template <typename... Args>
  void debug(Args&&... args) const {
    if (level >= 2) {
      (std::cout << ... << args) << "\n";
    }
  }
};

}  // namespace

ScenarioConfig ScenarioConfig::parse(const KeyValueConfig& raw) {
  ScenarioConfig c;
  c.raw = raw;

  c.width = raw.get_double("geometry.width_mm");
  c.height = raw.get_double("geometry.height_mm");
  c.nx = raw.get_int("geometry.nx");
  c.ny = raw.get_int("geometry.ny");
  for (const auto& key : raw.section_keys("geometry")) {
    if (key.find("geometry.notch") != 0) continue;
    const auto tk = tokens(raw.get_string(key));
    require(tk.size() == 3, "config ", key, ": expected 'yline x0 x1'");
    c.seams.push_back({std::stod(tk[0]), std::stod(tk[1]), std::stod(tk[2])});
  }
  if (raw.has("geometry.cutout")) {
    const auto tk = tokens(raw.get_string("geometry.cutout"));
    require(tk.size() == 4, "config geometry.cutout: expected 'xmin xmax ymin ymax'");
    c.cutout = CutoutSpec{std::stod(tk[0]), std::stod(tk[1]), std::stod(tk[2]),
                          std::stod(tk[3])};
  }

  c.material.lambda = raw.get_double("material.lambda_kN_per_mm2");
  c.material.mu = raw.get_double("material.mu_kN_per_mm2");
  c.material.Gc = raw.get_double("material.gc_kN_per_mm");
  c.material.kappa = raw.get_double("material.kappa", 1e-10);
  c.material.chi = raw.get_double("material.chi_kN_per_mm2", 0.0);
  c.material.xi = raw.get_double("material.xi_kN_per_mm2", 0.0);
  c.material.alpha = raw.get_double("material.alpha", 0.0);
  c.material.fiber_angle =
      raw.get_double("material.fiber_angle_deg", 0.0) * M_PI / 180.0;
  c.length_scale_mm = raw.get_double("material.length_scale_mm", 0.0);
  c.length_scale_factor_h = raw.get_double("material.length_scale_factor_h", 2.0);

  if (raw.has("heterogeneity.inclusion_count")) {
    const int count = raw.get_int("heterogeneity.inclusion_count");
    const double radius = raw.get_double("heterogeneity.inclusion_radius_mm");
    c.mismatch_ratio = raw.get_double("heterogeneity.mismatch_ratio", 10.0);
    c.rng_seed = static_cast<unsigned>(raw.get_int("heterogeneity.rng_seed", 1));
    double rx0 = 0, rx1 = c.width, ry0 = 0, ry1 = c.height;
    if (raw.has("heterogeneity.region")) {
      const auto tk = tokens(raw.get_string("heterogeneity.region"));
      require(tk.size() == 4, "config heterogeneity.region: expected 'xmin xmax ymin ymax'");
      rx0 = std::stod(tk[0]);
      rx1 = std::stod(tk[1]);
      ry0 = std::stod(tk[2]);
      ry1 = std::stod(tk[3]);
    }
    std::mt19937_64 rng(c.rng_seed);
    std::uniform_real_distribution<double> ux(rx0, rx1), uy(ry0, ry1);
    for (int i = 0; i < count; ++i) {
      const double x = ux(rng);
      const double y = uy(rng);
      c.inclusions.push_back({Vec2(x, y), radius});
    }
  }

  const std::string mode = raw.get_string("solver.mode");
  if (mode == "single_scale") c.mode = SolverMode::SingleScale;
  else if (mode == "gl_static_local") c.mode = SolverMode::GLStaticLocal;
  else if (mode == "gl_adaptive") c.mode = SolverMode::GLAdaptive;
  else fail("solver.mode '", mode, "' must be single_scale|gl_static_local|gl_adaptive");

  c.gl.mode = robin_mode_from_string(raw.get_string("solver.robin_mode", "robin_identity"));
  c.gl.tol_gl = raw.get_double("solver.tol_gl", 1e-6);
  c.gl.max_gl_iter = raw.get_int("solver.max_gl_iter", 60);
  c.gl.local.newton_tol = raw.get_double("solver.newton_tol", 1e-10);
  c.gl.local.stagger_tol = raw.get_double("solver.stagger_tol", 1e-6);
  c.gl.local.max_newton = raw.get_int("solver.max_newton", 30);
  c.gl.local.max_stagger = raw.get_int("solver.max_stagger", 400);
  c.adapt.tol_d = raw.get_double("solver.tol_d", 0.85);
  c.adapt.refinement_factor = raw.get_int("solver.refinement_factor", 8);
  c.adapt.max_corrector_cycles = raw.get_int("solver.max_corrector_cycles", 30);
  c.adapt.halo = raw.get_int("solver.halo", 0);
  c.local_seed = raw.get_string("solver.local_seed", "notch");
  if (raw.has("solver.local_elements"))
    for (const auto& t : tokens(raw.get_string("solver.local_elements")))
      c.local_elements.push_back(std::stoi(t));
  c.initiation_fraction = raw.get_double("solver.initiation_trigger_fraction", 0.75);
  c.initiation_radius_elems = raw.get_double("solver.initiation_radius_elems", 2.0);
  c.pf_support = raw.get_string("solver.pf_support", "all");

  c.steps = raw.get_int("load.steps");
  c.increment = raw.get_double("load.increment_mm");
  for (const auto& key : raw.section_keys("load")) {
    if (key.find("load.bc") != 0) continue;
    c.bcs.push_back(parse_bc(raw.get_string(key)));
  }
  require(!c.bcs.empty(), "config: no load.bc* entries");

  c.field_every = raw.get_int("output.field_every", 0);
  c.global_pf = raw.get_string("output.global_pf", "homogeneous");
  return c;
}

StiffnessField ScenarioConfig::stiffness_field() const {
  if (inclusions.empty()) return nullptr;
  auto incl = inclusions;
  const double ratio = mismatch_ratio;
  return [incl, ratio](const Vec2& x) {
    for (const auto& c : incl)
      if ((x - c.center).norm() <= c.radius) return ratio;
    return 1.0;
  };
}

LoadSchedule make_schedule(const QuadMesh& mesh, int steps, double increment,
                           const std::vector<BCSpec>& bcs, const QuadMesh* domain) {
  LoadSchedule s;
  s.steps = steps;
  s.increment = increment;
  for (const auto& bc : bcs) {
    const auto nodes = select_nodes(mesh, bc.selector, domain ? *domain : mesh);
    if (nodes.empty()) continue;  // selector may miss a submesh entirely
    if (bc.comp == -1) {
      for (int comp = 0; comp < 2; ++comp) s.groups.push_back({nodes, comp, 0.0});
    } else {
      s.groups.push_back({nodes, bc.comp, bc.scale});
    }
  }
  return s;
}

namespace {

struct OutputPaths {
  fs::path root, fields;
  bool enabled = false;
};

OutputPaths make_paths(const std::string& outdir) {
  OutputPaths p;
  if (outdir.empty()) return p;
  p.enabled = true;
  p.root = outdir;
  p.fields = p.root / "fields";
  fs::create_directories(p.fields);
  return p;
}

std::vector<double> cell_history_average(const QuadMesh& mesh, const HistoryField& H) {
  std::vector<double> out(mesh.n_elements(), 0.0);
  for (int e = 0; e < mesh.n_elements(); ++e)
    out[e] = 0.25 * (H.at(e, 0) + H.at(e, 1) + H.at(e, 2) + H.at(e, 3));
  return out;
}

void finalize_manifest(const OutputPaths& paths, const ScenarioConfig& cfg,
                       const RunArtifacts& art, const std::string& status) {
  if (!paths.enabled) return;
  std::ofstream f(paths.root / "manifest.txt");
  f << std::setprecision(17);
  f << "# pfgl run manifest\n";
  f << "version = 0.1.0\n";
  f << "status = " << status << "\n";
  f << "derived.length_scale_mm = " << art.l_resolved << "\n";
  f << "derived.seed_step = " << art.seed_step << "\n";
  f << "derived.steps_completed = " << art.series.size() << "\n";
  f << "monitor.d_min = " << art.monitor.d_min << "\n";
  f << "monitor.d_max = " << art.monitor.d_max << "\n";
  f << "monitor.max_d_increase = " << art.monitor.max_d_increase << "\n";
  f << "monitor.max_H_decrease = " << art.monitor.max_H_decrease << "\n";
  f << "# resolved configuration\n";
  f << cfg.raw.dump();
  write_series_csv((paths.root / "series.csv").string(), art.series);
  write_timing_csv((paths.root / "timing.csv").string(), art.series);
  if (!art.gl_log.empty())
    write_gl_log_csv((paths.root / "gl_convergence.csv").string(), art.gl_log);
  if (!art.adapt_events.empty())
    write_adapt_csv((paths.root / "adapt_events.csv").string(), art.adapt_events);
}

void run_single_scale(const ScenarioConfig& cfg, const OutputPaths& paths, Logger log,
                      RunArtifacts& art) {
  QuadMesh mesh = build_structured_mesh(cfg.width, cfg.height, cfg.nx, cfg.ny, cfg.seams,
                                        cfg.cutout);
  if (auto field = cfg.stiffness_field())
    for (int e = 0; e < mesh.n_elements(); ++e)
      mesh.stiffness_scale[e] = field(mesh.centroid(e));

  const double h = std::min(cfg.width / cfg.nx, cfg.height / cfg.ny);
  MaterialParams params = cfg.material;
  params.length_scale =
      cfg.length_scale_mm > 0 ? cfg.length_scale_mm : cfg.length_scale_factor_h * h;
  params.validate();
  art.l_resolved = params.length_scale;

  SingleScaleProblem prob;
  prob.mesh = &mesh;
  prob.params = params;
  prob.schedule = make_schedule(mesh, cfg.steps, cfg.increment, cfg.bcs);
  prob.config = cfg.gl.local;
  if (cfg.pf_support == "seed") {
    prob.pf_support = cfg.local_elements.empty() ? notch_adjacent_elements(mesh, cfg.seams)
                                                 : cfg.local_elements;
  } else {
    require(cfg.pf_support == "all", "solver.pf_support must be all|seed");
  }

  SingleScaleState state = initial_state(prob);
  const auto mask = prob.pf_mask();
  for (int step = 1; step <= cfg.steps; ++step) {
    const auto t0 = Clock::now();
    const StepStats st = solve_load_step(prob, state, step, &art.monitor);
    const EnergyBreakdown en =
        single_scale_energies(mesh, params, state.u, &state.d, &mask);
    SeriesRow row;
    row.step = step;
    row.ubar = prob.schedule.ubar(step);
    row.reaction = st.reaction;
    row.strain_energy = en.strain;
    row.fracture_energy = en.fracture;
    row.active_dofs = 0;
    {
      DofMap dofs(mesh.n_nodes(), 2);
      prob.schedule.apply(dofs, step);
      row.active_dofs = dofs.n_free() + mesh.n_nodes();
    }
    row.wall_ms = ms_since(t0);
    art.series.push_back(row);
    log.debug("step ", step, " reaction=", st.reaction, " sweeps=", st.stagger_sweeps);

    if (paths.enabled && cfg.field_every > 0 &&
        (step % cfg.field_every == 0 || step == cfg.steps)) {
      VtkFields f;
      f.point_vectors["displacement"] = &state.u;
      f.point_scalars["phase_field"] = &state.d;
      f.cell_scalars["history"] = cell_history_average(mesh, state.H);
      f.cell_scalars["stiffness_scale"] = {mesh.stiffness_scale.begin(),
                                           mesh.stiffness_scale.end()};
      std::ostringstream name;
      name << "single_" << std::setw(4) << std::setfill('0') << step << ".vtk";
      write_vtk((paths.fields / name.str()).string(), mesh, f);
    }
  }
  art.global_mesh = mesh;
  art.u = state.u;
  art.d = state.d;
}

int count_gl_active_dofs(const GLProblem& prob, int step) {
  DofMap g(prob.global_mesh->n_nodes(), 2);
  prob.global_schedule.apply(g, step);
  DofMap l(prob.local->mesh.n_nodes(), 2);
  prob.local_schedule.apply(l, step);
  const int nga = static_cast<int>(mask_positions(prob.ops.activeG).size());
  const int nla = static_cast<int>(mask_positions(prob.ops.activeL).size());
  return g.n_free() + l.n_free() + prob.local->mesh.n_nodes() + 2 * nga + nla;
}

void run_global_local(const ScenarioConfig& cfg, const OutputPaths& paths, Logger log,
                      RunArtifacts& art) {
  QuadMesh gmesh =
      build_structured_mesh(cfg.width, cfg.height, cfg.nx, cfg.ny, {}, cfg.cutout);
  const StiffnessField field = cfg.stiffness_field();

  const double hG = std::min(cfg.width / cfg.nx, cfg.height / cfg.ny);
  const double hL = hG / cfg.adapt.refinement_factor;
  MaterialParams params = cfg.material;
  params.length_scale =
      cfg.length_scale_mm > 0 ? cfg.length_scale_mm : cfg.length_scale_factor_h * hL;
  params.validate();
  art.l_resolved = params.length_scale;
  require(params.length_scale >= hL - 1e-12,
          "length scale under-resolves the local mesh (l < h_L)");

  const LoadSchedule gsched = make_schedule(gmesh, cfg.steps, cfg.increment, cfg.bcs);

  // ------------------------------------------------------------------ seed
  std::vector<int> seed = cfg.local_elements;
  int seed_step = 1;
  if (cfg.local_seed == "notch") {
    seed = notch_adjacent_elements(gmesh, cfg.seams);
    require(!seed.empty(), "local_seed=notch but no notch-adjacent elements found");
  } else if (cfg.local_seed == "initiation") {
    // elastic global phase until the threshold stress is reached
    double area = 0, sumE = 0, sumInv = 0;
    ElementBasis basis;
    const double E0 = params.youngs_modulus();
    for (int e = 0; e < gmesh.n_elements(); ++e) {
      for (const auto& qp : gauss4()) {
        basis.compute(gmesh, e, qp.xi, qp.eta);
        Vec2 x = Vec2::Zero();
        for (int i = 0; i < 4; ++i) x += basis.N[i] * gmesh.nodes[gmesh.elements[e][i]];
        const double sc = field ? field(x) : 1.0;
        const double dv = qp.w * basis.detJ;
        area += dv;
        sumE += dv * E0 * sc;
        sumInv += dv / (E0 * sc);
      }
    }
    const InitiationCriterion crit = critical_stress_from_averages(
        params, sumE / area, area / sumInv, cfg.initiation_fraction);
    log.info("initiation: sigma_c=", crit.sigma_c, " E_bar=", crit.E_bar);

    const VecX zero = VecX::Zero(2 * gmesh.n_nodes());
    const Triplets K0 = assemble_displacement(gmesh, params, nullptr, nullptr, zero).K;
    bool triggered = false;
    for (int step = 1; step <= cfg.steps; ++step) {
      const auto t0 = Clock::now();
      DofMap dofs(gmesh.n_nodes(), 2);
      gsched.apply(dofs, step);
      SpMat K;
      VecX rhs;
      apply_dirichlet(K0, VecX::Zero(2 * gmesh.n_nodes()), dofs, K, rhs);
      const VecX u = solve_sparse(K, rhs, "elastic pre-initiation solve");

      SeriesRow row;
      row.step = step;
      row.ubar = gsched.ubar(step);
      row.reaction = reaction_force(gmesh, params, u, nullptr, nullptr, gsched);
      row.strain_energy =
          single_scale_energies(gmesh, params, u, nullptr, nullptr).strain;
      row.fracture_energy = 0;
      row.active_dofs = dofs.n_free();
      row.wall_ms = ms_since(t0);
      art.series.push_back(row);

      const InitiationHit hit = initiation_monitor(gmesh, params, u, crit,
                                                   cfg.initiation_radius_elems * hG);
      if (hit.triggered) {
        seed = hit.candidate_elements;
        seed_step = step + 1;
        log.info("initiation triggered at step ", step, " (max principal stress ",
                 hit.max_principal_stress, "), seeding ", seed.size(), " elements");
        triggered = true;
        break;
      }
    }
    if (!triggered) {
      log.info("initiation never triggered; run stays elastic");
      art.global_mesh = gmesh;
      return;
    }
  } else {
    require(cfg.local_seed == "elements", "solver.local_seed must be notch|elements|initiation");
    require(!seed.empty(), "local_seed=elements needs solver.local_elements");
  }
  art.seed_step = seed_step;

  // seam-adjacent global elements must all be inside the seeded region
  for (int e : notch_adjacent_elements(gmesh, cfg.seams))
    require(std::find(seed.begin(), seed.end(), e) != seed.end(),
            "notch element ", e, " is outside the seeded local region");

  LocalMesh local = refine_region_to_local(gmesh, seed, cfg.adapt.refinement_factor,
                                           field, cfg.seams);
  for (int e : seed) gmesh.element_tags[e] = Region::Fictitious;

  AdaptHooks hooks;
  hooks.stiffness = field;
  hooks.make_local_schedule = [&cfg, &gmesh](const QuadMesh& lm) {
    return make_schedule(lm, cfg.steps, cfg.increment, cfg.bcs, &gmesh);
  };

  GLProblem prob = setup_gl_problem(gmesh, local, params, gsched,
                                    hooks.make_local_schedule(local.mesh), cfg.gl);
  GLState state = initial_gl_state(prob);

  // coarse-length material for the homogenized global phase field
  MaterialParams params_lG = params;
  params_lG.length_scale = params.length_scale * cfg.adapt.refinement_factor;
  HistoryField H_G;
  H_G.resize(gmesh.n_elements());

  for (int step = seed_step; step <= cfg.steps; ++step) {
    const auto t0 = Clock::now();
    double reaction = 0;
    if (cfg.mode == SolverMode::GLAdaptive) {
      const PCStepResult pc = predictor_corrector_step(prob, state, step, gmesh, local,
                                                       cfg.adapt, hooks, &art.monitor);
      for (const auto& ev : pc.events) art.adapt_events.push_back(ev);
      for (const auto& r : pc.gl.log) art.gl_log.push_back(r);
      art.cycles_per_step.push_back(pc.cycles);
      reaction = pc.gl.reaction;
    } else {
      const GLStepStats st = gl_load_step(prob, state, step, &art.monitor);
      for (const auto& r : st.log) art.gl_log.push_back(r);
      art.cycles_per_step.push_back(1);
      reaction = st.reaction;
    }

    const GLEnergies en = gl_energies(prob, state);
    update_global_history(gmesh, params_lG, state.u_G, H_G);

    SeriesRow row;
    row.step = step;
    row.ubar = gsched.ubar(step);
    row.reaction = reaction;
    row.strain_energy = en.total().strain;
    row.fracture_energy = en.total().fracture;
    row.active_dofs = count_gl_active_dofs(prob, step);
    row.wall_ms = ms_since(t0);
    art.series.push_back(row);
    log.debug("step ", step, " reaction=", reaction, " gl_iters=", art.gl_log.back().k,
              " local_nodes=", local.mesh.n_nodes());

    if (paths.enabled && cfg.field_every > 0 &&
        (step % cfg.field_every == 0 || step == cfg.steps)) {
      std::ostringstream suffix;
      suffix << std::setw(4) << std::setfill('0') << step << ".vtk";
      {
        VtkFields f;
        f.point_vectors["displacement"] = &state.u_G;
        VecX dg;
        if (cfg.global_pf == "homogeneous" || cfg.global_pf == "both") {
          dg = homogenized_global_pf(gmesh, params_lG, H_G, GlobalPFMode::Homogeneous);
          f.point_scalars["global_pf_homogeneous"] = &dg;
        }
        VecX dg2;
        if (cfg.global_pf == "global" || cfg.global_pf == "both") {
          dg2 = homogenized_global_pf(gmesh, params_lG, H_G, GlobalPFMode::GlobalPF);
          f.point_scalars["global_pf_solve"] = &dg2;
        }
        write_vtk((paths.fields / ("global_" + suffix.str())).string(), gmesh, f);
      }
      {
        VtkFields f;
        f.point_vectors["displacement"] = &state.u_L;
        f.point_scalars["phase_field"] = &state.d_L;
        f.cell_scalars["history"] = cell_history_average(local.mesh, state.H_L);
        f.cell_scalars["stiffness_scale"] = {local.mesh.stiffness_scale.begin(),
                                             local.mesh.stiffness_scale.end()};
        write_vtk((paths.fields / ("local_" + suffix.str())).string(), local.mesh, f);
      }
    }
  }

  art.global_mesh = gmesh;
  art.local = local;
  art.gl_state = state;
}

}  // namespace

RunArtifacts run_scenario(const ScenarioConfig& cfg, const std::string& outdir,
                          int log_level) {
  Logger log{log_level};
  const OutputPaths paths = make_paths(outdir);
  RunArtifacts art;
  try {
    if (cfg.mode == SolverMode::SingleScale) run_single_scale(cfg, paths, log, art);
    else run_global_local(cfg, paths, log, art);
  } catch (const std::exception& e) {
    finalize_manifest(paths, cfg, art, std::string("failed: ") + e.what());
    throw;
  }
  finalize_manifest(paths, cfg, art, "ok");
  return art;
}

namespace {

struct SeriesTable {
  std::vector<SeriesRow> rows;
  double final_interface_mismatch = 0;
};

SeriesTable read_series(const std::string& dir) {
  SeriesTable t;
  std::ifstream f(fs::path(dir) / "series.csv");
  require(f.good(), "compare: cannot open ", dir, "/series.csv");
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    SeriesRow r;
    char comma;
    std::istringstream in(line);
    in >> r.step >> comma >> r.ubar >> comma >> r.reaction >> comma >> r.strain_energy >>
        comma >> r.fracture_energy >> comma >> r.active_dofs;
    t.rows.push_back(r);
  }
  std::ifstream g(fs::path(dir) / "gl_convergence.csv");
  if (g.good()) {
    std::getline(g, line);
    double last = 0;
    while (std::getline(g, line)) {
      if (line.empty()) continue;
      std::istringstream in(line);
      int step, k;
      char comma;
      double du;
      in >> step >> comma >> k >> comma >> du;
      last = du;
      t.final_interface_mismatch = std::max(t.final_interface_mismatch, du);
      (void)last;
    }
  }
  return t;
}

}  // namespace

CompareReport compare_runs(const std::string& dir_a, const std::string& dir_b,
                           double tol_reaction_rel, double tol_energy_rel) {
  const SeriesTable A = read_series(dir_a), B = read_series(dir_b);
  require(A.rows.size() == B.rows.size(), "compare: step counts differ (", A.rows.size(),
          " vs ", B.rows.size(), ")");
  CompareReport rep;
  rep.steps = static_cast<int>(A.rows.size());
  double rmax = 0, smax = 0, fmax = 0;
  for (std::size_t i = 0; i < A.rows.size(); ++i) {
    require(A.rows[i].ubar == B.rows[i].ubar, "compare: mismatched load schedules at row ",
            i);
    rep.max_reaction_dev =
        std::max(rep.max_reaction_dev, std::abs(A.rows[i].reaction - B.rows[i].reaction));
    rep.max_strain_dev = std::max(
        rep.max_strain_dev, std::abs(A.rows[i].strain_energy - B.rows[i].strain_energy));
    rep.max_fracture_dev =
        std::max(rep.max_fracture_dev,
                 std::abs(A.rows[i].fracture_energy - B.rows[i].fracture_energy));
    rmax = std::max(rmax, std::abs(A.rows[i].reaction));
    smax = std::max(smax, std::abs(A.rows[i].strain_energy));
    fmax = std::max(fmax, std::abs(A.rows[i].fracture_energy));
  }
  rep.rel_reaction_dev = rep.max_reaction_dev / std::max(rmax, 1e-300);
  rep.rel_strain_dev = rep.max_strain_dev / std::max(smax, 1e-300);
  rep.rel_fracture_dev = rep.max_fracture_dev / std::max(fmax, 1e-300);
  rep.interface_mismatch_a = A.final_interface_mismatch;
  rep.interface_mismatch_b = B.final_interface_mismatch;
  rep.pass = rep.rel_reaction_dev <= tol_reaction_rel &&
             rep.rel_strain_dev <= tol_energy_rel &&
             rep.rel_fracture_dev <= tol_energy_rel;
  return rep;
}

int cli_run(const std::string& config_path, const std::string& outdir,
            const std::vector<std::string>& overrides, int log_level) {
  try {
    KeyValueConfig raw = KeyValueConfig::from_file(config_path);
    for (const auto& ov : overrides) raw.override_entry(ov);
    const ScenarioConfig cfg = ScenarioConfig::parse(raw);
    std::string out = outdir;
    if (out.empty()) {
      out = fs::path(config_path).stem().string() + "_out";
    }
    run_scenario(cfg, out, log_level);
    if (log_level >= 1) std::cout << "run complete: " << out << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cli_compare(const std::string& dir_a, const std::string& dir_b, double tol_reaction_rel,
                double tol_energy_rel) {
  try {
    const CompareReport rep = compare_runs(dir_a, dir_b, tol_reaction_rel, tol_energy_rel);
    std::cout << std::setprecision(6);
    std::cout << "steps compared:        " << rep.steps << "\n";
    std::cout << "reaction dev (abs/rel): " << rep.max_reaction_dev << " / "
              << rep.rel_reaction_dev << "\n";
    std::cout << "strain dev (abs/rel):   " << rep.max_strain_dev << " / "
              << rep.rel_strain_dev << "\n";
    std::cout << "fracture dev (abs/rel): " << rep.max_fracture_dev << " / "
              << rep.rel_fracture_dev << "\n";
    std::cout << "interface mismatch:     " << rep.interface_mismatch_a << " vs "
              << rep.interface_mismatch_b << "\n";
    std::cout << (rep.pass ? "PASS" : "FAIL") << "\n";
    return rep.pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace pfgl
