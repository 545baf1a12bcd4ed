#pragma once

#include <cmath>
#include <utility>

#include "epfrac/material.hpp"
#include "epfrac/tensor.hpp"

namespace epfrac {

/// Per-point plastic history. The plastic strain is trace-free with the
/// out-of-plane component carried explicitly; p accumulates the undegraded
/// dissipation sigma0 * epeq.
struct PlasticState {
  Sym2 ep;
  double epeq = 0.0;
  double p = 0.0;

  void enforce_trace_free() { ep.zz = -(ep.xx + ep.yy); }
};

struct StressState {
  Sym2 sigma;           // degraded stress, sigma_zz carried explicitly
  double sigma_eq = 0.0;
  double sigma_h = 0.0;  // tr(sigma)/3
  double psi0 = 0.0;     // undegraded elastic energy density (drives damage)
};

namespace detail {

/// 3D radial return at fixed total strain (eps in-plane, eps_zz given).
/// Minimizes 0.5*a*(e - ep):C:(e - ep) + b*sigma0*|dep|_eq over trace-free
/// increments from ep_old; the minimizer is radial along the trial deviator.
inline void return_map_3d(const Elasticity& el, const Sym2& eps_inplane, double eps_zz,
                          const PlasticState& old, double a, double b, double sigma0,
                          PlasticState& out, StressState& st) {
  Sym2 ee{eps_inplane.xx - old.ep.xx, eps_inplane.yy - old.ep.yy,
          eps_inplane.xy - old.ep.xy, eps_zz - old.ep.zz};
  Sym2 sig_tr = a * el.stress3(ee);
  const double eq_tr = eq_stress(sig_tr);
  const double yield = b * sigma0;

  out = old;
  if (eq_tr <= yield || !(eq_tr > 0.0)) {
    st.sigma = sig_tr;
    st.sigma_eq = eq_tr;
    st.psi0 = el.psi0(ee);
  } else {
    const double dg = (eq_tr - yield) / (3.0 * el.mu * a);
    const Sym2 n = (1.5 / eq_tr) * sig_tr.dev();
    out.ep = old.ep + dg * n;
    out.enforce_trace_free();
    out.epeq = old.epeq + dg;
    out.p = old.p + sigma0 * dg;
    ee = Sym2{eps_inplane.xx - out.ep.xx, eps_inplane.yy - out.ep.yy,
              eps_inplane.xy - out.ep.xy, eps_zz - out.ep.zz};
    st.sigma = a * el.stress3(ee);
    st.sigma_eq = eq_stress(st.sigma);
    st.psi0 = el.psi0(ee);
  }
  st.sigma_h = st.sigma.trace() / 3.0;
}

}  // namespace detail

/// Incremental elastoplastic update at one material point. Plane strain is a
/// straight radial return; plane stress wraps it in a scalar solve for the
/// out-of-plane strain so that sigma_zz = 0 after the return.
inline std::pair<PlasticState, StressState> plastic_update(const Sym2& eps,
                                                           const PlasticState& old,
                                                           double alpha,
                                                           const MaterialParams& m,
                                                           const Elasticity& el) {
  require(alpha >= 0.0 && alpha <= 1.0, "plastic_update: alpha outside [0,1]");
  require(eps.finite(), "plastic_update: non-finite strain");
  const double a = degr_a(alpha, m.eta);
  const double b = degr_b(alpha);

  PlasticState out;
  StressState st;
  if (m.mode == PlanarMode::plane_strain) {
    detail::return_map_3d(el, eps, 0.0, old, a, b, m.sigma0, out, st);
    return {out, st};
  }

  // Plane stress: solve g(z) = sigma_zz(return(eps, z)) = 0 for the total
  // out-of-plane strain z. g is continuous, strictly increasing in z.
  const auto g = [&](double z) {
    detail::return_map_3d(el, eps, z, old, a, b, m.sigma0, out, st);
    return st.sigma.zz;
  };
  double z = old.ep.zz + el.zz_from_plane_stress(eps.xx - old.ep.xx, eps.yy - old.ep.yy);
  double gz = g(z);
  const double scale = a * el.E * (1.0 + eps.max_abs() + old.ep.max_abs()) + b * m.sigma0;
  const double tol = 1e-10 * std::max(scale, 1e-12);

  if (std::fabs(gz) > tol) {
    // Bracket by stepping against the sign of g, then bisect with secant
    // acceleration.
    double step = std::max(1e-3, eps.max_abs() + old.ep.max_abs());
    double lo = z, hi = z, glo = gz, ghi = gz;
    for (int it = 0; it < 200 && glo * ghi > 0.0; ++it) {
      if (gz > 0.0) {
        lo -= step;
        glo = g(lo);
      } else {
        hi += step;
        ghi = g(hi);
      }
      step *= 2.0;
    }
    require(glo <= 0.0 && ghi >= 0.0, "plastic_update: failed to bracket plane-stress constraint");
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (ghi != glo) {
        const double sec = lo - glo * (hi - lo) / (ghi - glo);
        if (sec > lo && sec < hi) mid = sec;
      }
      const double gm = g(mid);
      if (std::fabs(gm) <= tol) break;
      if (gm > 0.0) {
        hi = mid;
        ghi = gm;
      } else {
        lo = mid;
        glo = gm;
      }
    }
  }
  st.sigma.zz = 0.0;  // enforce exactly; residual is below tol
  st.sigma_h = st.sigma.trace() / 3.0;
  return {out, st};
}

/// Degraded elastic energy density and the degraded stored-dissipation term
/// of the functional: (a(alpha) psi0, b(alpha) p).
inline std::pair<double, double> energy_density(const Sym2& eps, const PlasticState& state,
                                                double alpha, const MaterialParams& m,
                                                const Elasticity& el) {
  require(alpha >= 0.0 && alpha <= 1.0, "energy_density: alpha outside [0,1]");
  const Sym2 ee = el.elastic_strain(eps, state.ep);
  return {degr_a(alpha, m.eta) * el.psi0(ee), degr_b(alpha) * state.p};
}

}  // namespace epfrac
