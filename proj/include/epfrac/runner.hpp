#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "epfrac/config.hpp"
#include "epfrac/driver.hpp"

namespace epfrac {

inline SolverConfig solver_from_config(const Config& c) {
  SolverConfig s;
  const std::string scheme = c.get_str("solver.scheme", "aup");
  if (scheme == "aup")
    s.scheme = Scheme::aup;
  else if (scheme == "upa")
    s.scheme = Scheme::upa;
  else
    throw std::invalid_argument("config: solver.scheme must be aup or upa");
  s.tol_am = c.get_double("solver.tol_am", 1e-4);
  s.max_outer = c.get_int("solver.max_outer", 200);
  s.tol_inner = c.get_double("solver.tol_inner", 1e-8);
  s.max_inner = c.get_int("solver.max_inner", 100);
  s.tol_u = c.get_double("solver.tol_u", 1e-8);
  s.tol_alpha = c.get_double("solver.tol_alpha", 1e-8);
  s.max_halvings = c.get_int("solver.max_halvings", 4);
  s.check_monotone = c.get_bool("solver.check_monotone", false);
  require(s.tol_am > 0.0, "config: solver.tol_am must be positive");
  return s;
}

struct RunResult {
  Ledger ledger;
  std::string out_dir;
  bool failed = false;
  int failed_step = -1;
  std::string failure;
  MonotoneStats monotone;
  DerivedParams derived;
};

namespace detail {

inline nlohmann::json meta_json(const Config& cfg, const MaterialParams& m, double delta,
                                const MeshP1& mesh, const RunResult& res) {
  std::string warn;
  const DerivedParams d = derive_params(m, delta, &warn);
  nlohmann::json j;
  j["material"] = {{"E", m.E},       {"nu", m.nu},   {"Gc", m.Gc},
                   {"ell", m.ell},   {"sigma0", m.sigma0}, {"eta", m.eta},
                   {"mode", to_string(m.mode)}};
  j["derived"] = {{"Eprime", d.Eprime},   {"sigma_c", d.sigma_c}, {"r_y", d.r_y},
                  {"Gc_num", d.Gc_num},   {"K_Ic", d.K_Ic},       {"delta", delta}};
  j["mesh"] = {{"nodes", mesh.num_nodes()},
               {"elements", mesh.num_elements()},
               {"min_angle_deg", mesh.min_angle_deg()}};
  j["solver_notes"] = {
      {"am_metric", "max nodal |dalpha| between outer iterations"},
      {"dissipation_accumulation", "trial increments from the committed state; committed on outer convergence"},
      {"element_degradation", "quadratic-mean nodal damage (consistent with the lumped damage system)"},
      {"deterministic", true}};
  if (!warn.empty()) j["warnings"] = {warn};
  j["scheme"] = cfg.get_str("solver.scheme", "aup");
  j["failed"] = res.failed;
  if (res.failed) {
    j["failed_step"] = res.failed_step;
    j["failure"] = res.failure;
  }
  j["monotone"] = {{"checks", res.monotone.checks},
                   {"violations", res.monotone.violations},
                   {"worst_increase", res.monotone.worst_increase}};
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  require(os.good(), "cannot open " + path + " for writing");
  os << text;
}

}  // namespace detail

/// Build mesh, loads and solver from a config and execute the schedule,
/// writing ledger/meta/snapshots under the output directory. A failed step
/// is reported in the result (partial outputs are kept), not thrown.
inline RunResult run_simulation(const Config& cfg, std::string out_dir = "",
                                std::ostream* log = nullptr) {
  const MaterialParams m = material_from_config(cfg);
  const SolverConfig solver = solver_from_config(cfg);
  const double L0 = cfg.get_double("scale.L0", 1.0);
  const double scale_factor = cfg.get_double("mesh.scale", 1.0);

  if (out_dir.empty()) out_dir = cfg.get_str("output.dir", "out");
  std::filesystem::create_directories(out_dir);

  const std::string mesh_type = cfg.get_str("mesh.type", "rectangle");
  MeshP1 mesh;
  double delta = 0.0;
  double xi0 = 0.0;
  double kfit_rmin = 0.0, kfit_rmax = 1e300;
  if (mesh_type == "rectangle") {
    const double L = scale_factor * cfg.get_double("mesh.L") / L0;
    const double H = scale_factor * cfg.get_double("mesh.H") / L0;
    delta = cfg.get_double("mesh.delta") / L0;
    xi0 = cfg.get_double("mesh.precrack", 0.0) / L0;
    mesh = mesh_rectangle(L, H, delta, xi0);
  } else if (mesh_type == "notch") {
    NotchGeometry g;
    g.omega_bar = cfg.get_double("mesh.omega_deg") * std::numbers::pi / 180.0;
    g.R = scale_factor * cfg.get_double("mesh.R") / L0;
    NotchMeshOptions opt;
    opt.delta_tip = cfg.get_double("mesh.delta_tip") / L0;
    opt.delta_far = cfg.get_double("mesh.delta_far", 0.125 * g.R * L0) / L0;
    opt.grade = cfg.get_double("mesh.grade", 0.25);
    kfit_rmin = cfg.get_double("post.kfit_rmin_factor", 4.0) * opt.delta_tip;
    kfit_rmax = cfg.get_double("post.kfit_rmax_factor", 20.0) * opt.delta_tip;
    opt.fine_radius = cfg.get_double("mesh.fine_radius", 1.2 * kfit_rmax * L0) / L0;
    delta = opt.delta_tip;
    mesh = mesh_notch(g, opt);
  } else {
    throw std::invalid_argument("config: mesh.type must be rectangle or notch");
  }

  Simulation sim(std::move(mesh), m, solver);

  const std::string load_type = cfg.get_str("load.type");
  LoadProgram prog;
  if (load_type == "surfing") {
    prog.type = LoadProgram::Type::surfing;
    prog.surf = make_surfing_load(cfg.get_double("load.psi", 1.0), cfg.get_double("load.V", 1.0), m);
    sim.seed_damage(precrack_seed(sim.mesh(), xi0, m.ell));
    sim.set_precrack_tip(xi0);
    sim.set_ahead_guard(xi0 + 2.5 * m.ell);
  } else if (load_type == "notch") {
    prog.type = LoadProgram::Type::notch;
    prog.notch = make_notch_load(cfg.get_double("mesh.omega_deg") * std::numbers::pi / 180.0, m.mode);
    sim.set_kfit_window(kfit_rmin, kfit_rmax);
  } else if (load_type == "uniaxial") {
    prog.type = LoadProgram::Type::uniaxial;
  } else {
    throw std::invalid_argument("config: load.type must be surfing, notch or uniaxial");
  }
  sim.set_load(prog);

  const double t0 = cfg.get_double("load.t0", 0.0);
  const double t1 = cfg.get_double("load.t1");
  const int nsteps = cfg.get_int("load.steps", 100);
  require(t1 > t0 && nsteps >= 1, "config: need load.t1 > load.t0 and load.steps >= 1");
  std::vector<double> times(nsteps);
  for (int i = 0; i < nsteps; ++i) times[i] = t0 + (t1 - t0) * (i + 1) / nsteps;

  const int snap_every = cfg.get_int("output.snapshot_every", 0);
  const bool notch_run = prog.type == LoadProgram::Type::notch;

  const auto snapshot = [&](const Simulation& s, int step) {
    char name[64];
    std::snprintf(name, sizeof(name), "snap_%06d.vtk", step);
    const auto& plast = s.plastic();
    const int ne = s.mesh().num_elements();
    std::vector<double> epeq(ne), diss(ne), sig_h(ne), sig_eq(ne), psi0(ne);
    std::vector<double> ep_xx(ne), ep_yy(ne), ep_xy(ne), ep_zz(ne);
    for (int e = 0; e < ne; ++e) {
      epeq[e] = plast[e].epeq;
      diss[e] = plast[e].p;
      sig_h[e] = s.stress()[e].sigma_h;
      sig_eq[e] = s.stress()[e].sigma_eq;
      psi0[e] = s.stress()[e].psi0;
      ep_xx[e] = plast[e].ep.xx;
      ep_yy[e] = plast[e].ep.yy;
      ep_xy[e] = plast[e].ep.xy;
      ep_zz[e] = plast[e].ep.zz;
    }
    write_snapshot_vtk(out_dir + "/" + name, s.mesh(), &s.displacement(), &s.alpha(),
                       {{"epeq", &epeq},
                        {"diss", &diss},
                        {"sig_h", &sig_h},
                        {"sig_eq", &sig_eq},
                        {"psi0", &psi0},
                        {"ep_xx", &ep_xx},
                        {"ep_yy", &ep_yy},
                        {"ep_xy", &ep_xy},
                        {"ep_zz", &ep_zz}});
    if (notch_run) {
      std::snprintf(name, sizeof(name), "trace_%06d.csv", step);
      std::ofstream ts(out_dir + "/" + name);
      ts << "r,sig_phiphi,max_alpha,epeq\n";
      ts.precision(17);
      for (const auto& h : hoop_trace(s.mesh(), s.stress(), s.alpha(), s.epeq_field()))
        ts << h.r << "," << h.sig_phiphi << "," << h.max_alpha << "," << h.epeq << "\n";
    }
  };

  RunResult res;
  res.out_dir = out_dir;
  res.derived = derive_params(m, delta);
  detail::write_text(out_dir + "/config.cfg", cfg.print());

  try {
    sim.run_schedule(times, [&](const Simulation& s, int step) {
      if (snap_every > 0 && (step + 1) % snap_every == 0) snapshot(s, step);
      if (log && (step % 10 == 0))
        (*log) << "step " << step << " t=" << s.time() << " J=" << s.ledger().rows.back().J
               << " tip=" << s.ledger().rows.back().tip_x << "\n";
    });
  } catch (const StepFailure& sf) {
    res.failed = true;
    res.failed_step = sf.step_index;
    res.failure = sf.what();
  }
  snapshot(sim, static_cast<int>(sim.ledger().rows.size()) - 1 + (res.failed ? 1 : 0));
  res.ledger = sim.ledger();
  res.monotone = sim.monotone_stats();
  res.ledger.write_csv(out_dir + "/ledger.csv");
  detail::write_text(out_dir + "/meta.json",
                     detail::meta_json(cfg, m, delta, sim.mesh(), res).dump(2) + "\n");
  return res;
}

/// 1D damage-profile study: for each regularization length, solve the bar
/// problem with the damage pinned to 1 at the center and compare with the
/// closed-form optimal profile (1 - |x|/2l)^2. Emits one CSV per length plus
/// a summary.
inline void run_profile_study(const Config& cfg, std::string out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<double> ells;
  {
    std::istringstream is(cfg.get_str("profile.ells", "0.1 0.25 0.4"));
    double v;
    while (is >> v) ells.push_back(v);
  }
  const double ratio = cfg.get_double("profile.delta_over_ell", 0.2);
  const double Gc = cfg.get_double("material.Gc", 1.0);
  std::ofstream sum(out_dir + "/summary.csv");
  sum << "ell,delta,linf_error,support_width,surface_energy,Gc_num\n";
  sum.precision(17);
  for (double ell : ells) {
    const double h = ratio * ell;
    const double half = 5.0 * ell;
    const int nhalf = static_cast<int>(std::lround(half / h));
    std::vector<double> x(2 * nhalf + 1);
    for (int i = 0; i <= 2 * nhalf; ++i) x[i] = -half + i * h;
    DamageModel dm = DamageModel::from_segments(x);
    std::vector<double> lb(x.size(), 0.0), alpha(x.size(), 0.0);
    lb[nhalf] = 1.0;
    std::vector<double> q(x.size() - 1, 0.0);
    dm.solve(q, lb, alpha, Gc, ell);
    double linf = 0.0;
    int first = -1, last = -1;
    char name[64];
    std::snprintf(name, sizeof(name), "profile_ell_%g.csv", ell);
    std::ofstream ps(out_dir + "/" + name);
    ps << "x,alpha,alpha_closed_form\n";
    ps.precision(17);
    for (size_t i = 0; i < x.size(); ++i) {
      const double s = std::fabs(x[i]) / (2.0 * ell);
      const double ref = s >= 1.0 ? 0.0 : (1.0 - s) * (1.0 - s);
      linf = std::max(linf, std::fabs(alpha[i] - ref));
      if (alpha[i] > 1e-12) {
        if (first < 0) first = static_cast<int>(i);
        last = static_cast<int>(i);
      }
      ps << x[i] << "," << alpha[i] << "," << ref << "\n";
    }
    const double support = first < 0 ? 0.0 : x[last] - x[first];
    const double es = dm.surface_energy(alpha, Gc, ell);
    sum << ell << "," << h << "," << linf << "," << support << "," << es << ","
        << numerical_toughness(Gc, ell, h) << "\n";
  }
}

}  // namespace epfrac
