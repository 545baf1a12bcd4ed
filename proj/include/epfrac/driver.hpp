#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "epfrac/damage.hpp"
#include "epfrac/equilibrium.hpp"
#include "epfrac/loads.hpp"
#include "epfrac/postproc.hpp"

namespace epfrac {

enum class Scheme { aup, upa };

inline std::string to_string(Scheme s) { return s == Scheme::aup ? "aup" : "upa"; }

struct SolverConfig {
  Scheme scheme = Scheme::aup;
  double tol_am = 1e-4;      // max nodal |dalpha| between outer iterations
  int max_outer = 200;
  double tol_inner = 1e-8;   // max element |deps_p| in the AUP inner loop
  int max_inner = 100;
  double tol_u = 1e-8;       // CG relative residual
  double tol_alpha = 1e-8;   // damage KKT tolerance
  int max_halvings = 4;
  bool check_monotone = false;
  double monotone_slack = 1e-8;
};

struct LoadProgram {
  enum class Type { none, surfing, notch, uniaxial, custom };
  Type type = Type::none;
  SurfingLoad surf;
  NotchLoad notch;
  std::function<Vec2(Vec2, double)> custom;
};

struct StepStats {
  bool converged = false;
  int outer_iters = 0;
  int inner_iters = 0;
  int cg_iters = 0;
};

struct MonotoneStats {
  long checks = 0;
  long violations = 0;
  double worst_increase = 0.0;
};

struct EnergyParts {
  double elastic = 0.0;
  double surface = 0.0;
  double plastic = 0.0;
  double total() const { return elastic + surface + plastic; }
};

struct StepFailure : std::runtime_error {
  explicit StepFailure(int index, const std::string& what)
      : std::runtime_error("step " + std::to_string(index) + " failed: " + what), step_index(index) {}
  int step_index;
};

/// Effective element damage: the value whose degradation equals the nodal
/// average of a(alpha) (and simultaneously of b(alpha)) over the element.
/// Using it in the stress update makes all three sub-minimizations descend
/// one and the same discrete functional, so alternating minimization is
/// monotone by construction.
inline double element_damage(double a0, double a1, double a2) {
  const double s = ((1.0 - a0) * (1.0 - a0) + (1.0 - a1) * (1.0 - a1) + (1.0 - a2) * (1.0 - a2)) / 3.0;
  return std::clamp(1.0 - std::sqrt(s), 0.0, 1.0);
}

/// One simulation: mesh, fields, the two alternating-minimization schemes,
/// and the per-step observable ledger.
class Simulation {
 public:
  Simulation(MeshP1 mesh, const MaterialParams& m, const SolverConfig& cfg)
      : mesh_(std::move(mesh)),
        m_(m),
        el_(Elasticity::from(m)),
        cfg_(cfg),
        disp_(mesh_, el_),
        dmg_(DamageModel::from_mesh(mesh_)) {
    m_.validate();
    const int nn = mesh_.num_nodes();
    const int ne = mesh_.num_elements();
    u_.assign(2 * nn, 0.0);
    alpha_.assign(nn, 0.0);
    alpha_lb_.assign(nn, 0.0);
    committed_.assign(ne, PlasticState{});
    trial_.assign(ne, PlasticState{});
    stress_.assign(ne, StressState{});
    alpha_star_.assign(ne, 0.0);
    a_eff_.assign(ne, 1.0 + m_.eta);
    free_dof_.assign(2 * nn, 1);
    for (const auto& be : mesh_.bedges) {
      if (be.tag != EdgeTag::outer_dirichlet) continue;
      for (int nid : {be.n0, be.n1}) {
        free_dof_[2 * nid] = 0;
        free_dof_[2 * nid + 1] = 0;
      }
    }
    contour_ = contour_outer(mesh_);
  }

  void set_load(const LoadProgram& p) { program_ = p; }

  /// Initial damage lower bound (pre-crack seed); also initializes alpha.
  void seed_damage(const std::vector<double>& lb) {
    require(lb.size() == alpha_.size(), "seed_damage: size mismatch");
    alpha_lb_ = lb;
    alpha_ = lb;
  }

  void set_precrack_tip(double x) { precrack_tip_ = x; }
  void set_ahead_guard(double x) { ahead_guard_ = x; }
  void set_kfit_window(double r_min, double r_max) {
    kfit_rmin_ = r_min;
    kfit_rmax_ = r_max;
  }

  const MeshP1& mesh() const { return mesh_; }
  const MaterialParams& material() const { return m_; }
  const Elasticity& elasticity() const { return el_; }
  const DamageModel& damage_model() const { return dmg_; }
  const std::vector<double>& displacement() const { return u_; }
  const std::vector<double>& alpha() const { return alpha_; }
  const std::vector<PlasticState>& plastic() const { return committed_; }
  const std::vector<StressState>& stress() const { return stress_; }
  const Ledger& ledger() const { return ledger_; }
  const MonotoneStats& monotone_stats() const { return mono_; }
  double time() const { return t_; }

  std::vector<double> epeq_field() const {
    std::vector<double> v(committed_.size());
    for (size_t e = 0; e < committed_.size(); ++e) v[e] = committed_[e].epeq;
    return v;
  }

  EnergyParts energies() const {
    EnergyParts ep;
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      ep.elastic += mesh_.area[e] * degr_a(alpha_star_[e], m_.eta) * stress_[e].psi0;
      ep.plastic += mesh_.area[e] * degr_b(alpha_star_[e]) * trial_[e].p;
    }
    ep.surface = dmg_.surface_energy(alpha_iter_.empty() ? alpha_ : alpha_iter_, m_.Gc, m_.ell);
    return ep;
  }

  /// Advance to the given load value; commits on success. Splits the
  /// increment (up to cfg.max_halvings deep) when the alternating
  /// minimization stalls.
  void advance_to(double t_target, int step_index) {
    advance_recursive(t_, t_target, 0, step_index);
    append_ledger_row(step_index, t_target);
  }

  /// Run a full schedule of load values, invoking `on_commit` (if set) after
  /// each committed step.
  void run_schedule(const std::vector<double>& times,
                    const std::function<void(const Simulation&, int)>& on_commit = nullptr) {
    for (size_t i = 0; i < times.size(); ++i) {
      if (i > 0)
        require(times[i] > times[i - 1], "run_schedule: load steps must be strictly increasing");
      advance_to(times[i], static_cast<int>(i));
      if (on_commit) on_commit(*this, static_cast<int>(i));
    }
  }

  /// Prescribed boundary displacement of the active load program.
  Vec2 boundary_value(const Vec2& pos, double t) const {
    switch (program_.type) {
      case LoadProgram::Type::none:
        return {0.0, 0.0};
      case LoadProgram::Type::surfing: {
        if (std::fabs(pos.y) < 1e-12 && pos.x - program_.surf.V * t < 0.0)
          return {0.0, 0.0};  // crack-face midline: the opening field is odd in y
        return surfing_displacement(pos.x, pos.y, t, program_.surf, m_);
      }
      case LoadProgram::Type::notch: {
        const double r = pos.norm();
        const double phi = std::atan2(pos.y, pos.x);
        return notch_displacement(r, phi, t, program_.notch, m_);
      }
      case LoadProgram::Type::uniaxial: {
        const double lat = m_.mode == PlanarMode::plane_stress ? m_.nu : m_.nu / (1.0 - m_.nu);
        return {t * pos.x, -t * lat * pos.y};
      }
      case LoadProgram::Type::custom:
        return program_.custom(pos, t);
    }
    return {0.0, 0.0};
  }

  const ContourSpec& contour() const { return contour_; }

  /// J-integral of the current committed state on a given contour.
  JResult j_on(const ContourSpec& contour) const {
    std::vector<double> w(mesh_.num_elements());
    std::vector<double> epeq(mesh_.num_elements());
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      w[e] = degr_a(alpha_star_[e], m_.eta) * stress_[e].psi0;
      epeq[e] = committed_[e].epeq;
    }
    return j_integral(mesh_, contour, u_, stress_, w, epeq);
  }

 private:
  void apply_dirichlet(double t) {
    for (int i = 0; i < mesh_.num_nodes(); ++i) {
      if (free_dof_[2 * i]) continue;
      const Vec2 v = boundary_value(mesh_.X[i], t);
      u_[2 * i] = v.x;
      u_[2 * i + 1] = v.y;
    }
  }

  void update_alpha_star(const std::vector<double>& a) {
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      const auto& tnodes = mesh_.tri[e];
      alpha_star_[e] = element_damage(a[tnodes[0]], a[tnodes[1]], a[tnodes[2]]);
      a_eff_[e] = degr_a(alpha_star_[e], m_.eta);
    }
  }

  /// Elastic stress/energy re-evaluation at fixed plastic state (no flow).
  void refresh_elastic_cache() {
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      const Sym2 eps = mesh_.element_strain(e, u_);
      const Sym2 ee = el_.elastic_strain(eps, trial_[e].ep);
      StressState& st = stress_[e];
      st.sigma = degr_a(alpha_star_[e], m_.eta) * el_.stress3(ee);
      if (m_.mode == PlanarMode::plane_stress) st.sigma.zz = 0.0;
      st.sigma_eq = eq_stress(st.sigma);
      st.sigma_h = st.sigma.trace() / 3.0;
      st.psi0 = el_.psi0(ee);
    }
  }

  /// One exact plastic minimization sweep against the current displacement.
  /// Returns the largest plastic-strain component change.
  double plastic_sweep() {
    double dmax = 0.0;
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      const Sym2 eps = mesh_.element_strain(e, u_);
      auto [state, st] = plastic_update(eps, committed_[e], alpha_star_[e], m_, el_);
      dmax = std::max(dmax, (state.ep - trial_[e].ep).max_abs());
      trial_[e] = state;
      stress_[e] = st;
    }
    return dmax;
  }

  void check_monotone(double& e_prev, const char* where) {
    if (!cfg_.check_monotone) return;
    const EnergyParts ep = energies();
    const double e_now = ep.total();
    mono_.checks++;
    const double slack = cfg_.monotone_slack * std::max(1.0, std::fabs(e_prev));
    if (e_now > e_prev + slack) {
      mono_.violations++;
      mono_.worst_increase = std::max(mono_.worst_increase, e_now - e_prev);
      (void)where;
    }
    e_prev = e_now;
  }

  StepStats step_aup(double t) {
    apply_dirichlet(t);
    StepStats stats;
    alpha_iter_ = alpha_;
    trial_ = committed_;
    update_alpha_star(alpha_iter_);
    refresh_elastic_cache();
    double e_mono = cfg_.check_monotone ? energies().total() : 0.0;

    for (int outer = 1; outer <= cfg_.max_outer; ++outer) {
      stats.outer_iters = outer;
      // inner elastoplastic fixed point at fixed damage
      bool inner_ok = false;
      for (int inner = 1; inner <= cfg_.max_inner; ++inner) {
        stats.inner_iters++;
        disp_.assemble(a_eff_, trial_);
        stats.cg_iters += disp_.solve(u_, free_dof_, cfg_.tol_u).iterations;
        if (cfg_.check_monotone) {
          refresh_elastic_cache();
          check_monotone(e_mono, "displacement");
        }
        const double dep = plastic_sweep();
        check_monotone(e_mono, "plastic");
        if (dep < cfg_.tol_inner) {
          inner_ok = true;
          break;
        }
      }
      if (!inner_ok) return stats;

      std::vector<double> q(mesh_.num_elements());
      for (int e = 0; e < mesh_.num_elements(); ++e) q[e] = stress_[e].psi0 + trial_[e].p;
      std::vector<double> alpha_new = alpha_iter_;
      dmg_.solve(q, alpha_lb_, alpha_new, m_.Gc, m_.ell, cfg_.tol_alpha);
      double dalpha = 0.0;
      for (size_t i = 0; i < alpha_new.size(); ++i)
        dalpha = std::max(dalpha, std::fabs(alpha_new[i] - alpha_iter_[i]));
      alpha_iter_ = alpha_new;
      update_alpha_star(alpha_iter_);
      check_monotone(e_mono, "damage");

      if (dalpha < cfg_.tol_am) {
        // consistency pass so committed fields equilibrate the final damage
        disp_.assemble(a_eff_, trial_);
        stats.cg_iters += disp_.solve(u_, free_dof_, cfg_.tol_u).iterations;
        plastic_sweep();
        stats.converged = true;
        return stats;
      }
    }
    return stats;
  }

  StepStats step_upa(double t) {
    apply_dirichlet(t);
    StepStats stats;
    alpha_iter_ = alpha_;
    trial_ = committed_;
    update_alpha_star(alpha_iter_);
    refresh_elastic_cache();
    double e_mono = cfg_.check_monotone ? energies().total() : 0.0;

    for (int outer = 1; outer <= cfg_.max_outer; ++outer) {
      stats.outer_iters = outer;
      stats.inner_iters++;
      plastic_sweep();  // plastic minimization against the previous displacement
      check_monotone(e_mono, "plastic");

      std::vector<double> q(mesh_.num_elements());
      for (int e = 0; e < mesh_.num_elements(); ++e) q[e] = stress_[e].psi0 + trial_[e].p;
      std::vector<double> alpha_new = alpha_iter_;
      dmg_.solve(q, alpha_lb_, alpha_new, m_.Gc, m_.ell, cfg_.tol_alpha);
      double dalpha = 0.0;
      for (size_t i = 0; i < alpha_new.size(); ++i)
        dalpha = std::max(dalpha, std::fabs(alpha_new[i] - alpha_iter_[i]));
      alpha_iter_ = alpha_new;
      update_alpha_star(alpha_iter_);
      check_monotone(e_mono, "damage");

      disp_.assemble(a_eff_, trial_);
      stats.cg_iters += disp_.solve(u_, free_dof_, cfg_.tol_u).iterations;
      if (cfg_.check_monotone) {
        refresh_elastic_cache();
        check_monotone(e_mono, "displacement");
      }

      if (dalpha < cfg_.tol_am) {
        if (!cfg_.check_monotone) refresh_elastic_cache();
        stats.converged = true;
        return stats;
      }
    }
    return stats;
  }

  void advance_recursive(double t_from, double t_to, int depth, int step_index) {
    StepStats stats = cfg_.scheme == Scheme::aup ? step_aup(t_to) : step_upa(t_to);
    if (stats.converged) {
      committed_ = trial_;
      alpha_ = alpha_iter_;
      alpha_lb_ = alpha_;
      t_ = t_to;
      last_outer_ = stats.outer_iters;
      last_halvings_ = depth;
      return;
    }
    if (depth >= cfg_.max_halvings)
      throw StepFailure(step_index,
                        "alternating minimization did not converge after " +
                            std::to_string(cfg_.max_outer) + " iterations at t = " +
                            std::to_string(t_to) + " (halving limit reached)");
    const double mid = 0.5 * (t_from + t_to);
    advance_recursive(t_from, mid, depth + 1, step_index);
    advance_recursive(mid, t_to, depth + 1, step_index);
    last_halvings_ = depth + 1;
  }

  void append_ledger_row(int step_index, double t) {
    LedgerRow row;
    row.step = step_index;
    row.t = t;
    const EnergyParts ep = energies();
    row.elastic = ep.elastic;
    row.surface = ep.surface;
    row.plastic = ep.plastic;
    row.total = ep.total();
    row.J = j_on(contour_).J;
    const CrackMetrics cm = crack_metrics(mesh_, alpha_, precrack_tip_, ahead_guard_);
    row.tip_x = cm.tip_x;
    row.crack_len = cm.crack_len;
    row.frac_extent = cm.frac_extent;
    row.max_alpha = cm.max_alpha;
    row.max_alpha_ahead = cm.max_alpha_ahead;
    const PlasticZoneMetrics pz = plastic_zone_metrics(mesh_, epeq_field());
    row.h_p = pz.h_p;
    row.plastic_area = pz.area;
    if (program_.type == LoadProgram::Type::notch) {
      const auto trace = hoop_trace(mesh_, stress_, alpha_, epeq_field());
      const KFit fit = k_factor(trace, program_.notch.lambda, kfit_rmin_, kfit_rmax_);
      row.k = fit.k;
      row.k_residual = fit.residual;
      row.k_warn = fit.window_warn ? 1 : 0;
    }
    row.am_iters = last_outer_;
    row.halvings = last_halvings_;
    ledger_.rows.push_back(row);
  }

  MeshP1 mesh_;
  MaterialParams m_;
  Elasticity el_;
  SolverConfig cfg_;
  DisplacementSolver disp_;
  DamageModel dmg_;
  LoadProgram program_;
  ContourSpec contour_;

  std::vector<double> u_, alpha_, alpha_lb_, alpha_iter_;
  std::vector<PlasticState> committed_, trial_;
  std::vector<StressState> stress_;
  std::vector<double> alpha_star_, a_eff_;
  std::vector<uint8_t> free_dof_;

  Ledger ledger_;
  MonotoneStats mono_;
  double t_ = 0.0;
  double precrack_tip_ = 0.0;
  double ahead_guard_ = -1e300;
  double kfit_rmin_ = 0.0;
  double kfit_rmax_ = 1e300;
  int last_outer_ = 0;
  int last_halvings_ = 0;
};

}  // namespace epfrac
