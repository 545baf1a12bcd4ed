#pragma once

#include <cmath>
#include <numbers>

#include "epfrac/material.hpp"
#include "epfrac/tensor.hpp"

namespace epfrac {

/// Characteristic equation of the notch stress singularity:
/// sin(2*lambda*beta) + lambda*sin(2*beta) = 0 with beta = pi - omega_bar.
inline double lambda_residual(double lam, double omega_bar) {
  const double beta = std::numbers::pi - omega_bar;
  return std::sin(2.0 * lam * beta) + lam * std::sin(2.0 * beta);
}

/// Smallest root in [1/2, 1] of the singularity equation, by bisection to
/// 1e-12. omega_bar -> 0 recovers the crack (lambda = 1/2); omega_bar = pi/2
/// is the straight edge (lambda = 1).
inline double solve_lambda(double omega_bar) {
  require(omega_bar > 0.0 && omega_bar <= std::numbers::pi / 2.0 + 1e-15,
          "solve_lambda: omega_bar outside (0, pi/2]");
  double lo = 0.5, hi = 1.0;
  double flo = lambda_residual(lo, omega_bar);
  const double fhi = lambda_residual(hi, omega_bar);
  if (flo == 0.0) return lo;
  if (fhi >= 0.0) {
    // beta <= pi/2: the only root in the bracket is the straight-edge limit.
    require(std::fabs(fhi) <= 1e-12, "solve_lambda: no sign change in [1/2, 1]");
    return 1.0;
  }
  require(flo > 0.0, "solve_lambda: no sign change in [1/2, 1]");
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = lambda_residual(mid, omega_bar);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Mode-I asymptotic field of a V-notch: leading-order Williams expansion
/// with traction-free flanks, prescribed on the outer boundary and scaled
/// proportionally in time.
struct NotchLoad {
  double omega_bar = 0.0;
  double lambda = 0.5;
  double g = 0.0;  // flank-condition coefficient in the angular function
  PlanarMode mode = PlanarMode::plane_strain;
};

inline NotchLoad make_notch_load(double omega_bar, PlanarMode mode) {
  NotchLoad nl;
  nl.omega_bar = omega_bar;
  nl.lambda = solve_lambda(omega_bar);
  nl.mode = mode;
  const double beta = std::numbers::pi - omega_bar;
  const double lam = nl.lambda;
  if (std::fabs(1.0 - lam) >= 1e-6)
    nl.g = (1.0 + lam) * std::sin((1.0 + lam) * beta) /
           ((1.0 - lam) * std::sin((1.0 - lam) * beta));
  return nl;
}

/// Displacement of the notch field at polar point (r, phi), Cartesian
/// components, scaled by the load factor t. The lambda -> 1 limit (straight
/// edge) removes the 1/(1-lambda^2) singularity analytically: the field
/// degenerates to uniform uniaxial tension parallel to the edge.
inline Vec2 notch_displacement(double r, double phi, double t, const NotchLoad& nl,
                               const MaterialParams& m) {
  require(r >= 0.0, "notch_displacement: negative radius");
  const double lam = nl.lambda;
  if (std::fabs(1.0 - lam) < 1e-6) {
    const double x = r * std::cos(phi), y = r * std::sin(phi);
    if (m.mode == PlanarMode::plane_stress)
      return {-2.0 * m.nu * t * x / m.E, 2.0 * t * y / m.E};
    return {-2.0 * m.nu * (1.0 + m.nu) * t * x / m.E, 2.0 * (1.0 - m.nu * m.nu) * t * y / m.E};
  }

  const double c = std::pow(2.0 * std::numbers::pi, lam - 1.0) / (1.0 - nl.g);
  const double p = (1.0 + lam), q = (1.0 - lam);
  const double F = c * (std::cos(p * phi) - nl.g * std::cos(q * phi));
  const double F1 = c * (-p * std::sin(p * phi) + nl.g * q * std::sin(q * phi));
  const double F2 = c * (-p * p * std::cos(p * phi) + nl.g * q * q * std::cos(q * phi));
  const double F3 = c * (p * p * p * std::sin(p * phi) - nl.g * q * q * q * std::sin(q * phi));

  const double nu = m.nu;
  double a1, a2, b2;
  if (m.mode == PlanarMode::plane_stress) {
    a1 = 1.0;
    a2 = (lam + 1.0) * (1.0 - nu * lam);
    b2 = 2.0 * (1.0 + nu) * lam * lam + (lam + 1.0) * (1.0 - nu * lam);
  } else {
    a1 = 1.0 - nu * nu;
    a2 = (lam + 1.0) * (1.0 - nu * lam - nu * nu * (lam + 1.0));
    b2 = 2.0 * (1.0 + nu) * lam * lam + (lam + 1.0) * (1.0 - nu * lam - nu * nu * (lam + 1.0));
  }
  const double rl = std::pow(r, lam) / m.E;
  const double ur = rl * (a1 * F2 + a2 * F) / (lam * lam * (lam + 1.0));
  const double uphi = rl * (a1 * F3 + b2 * F1) / (lam * lam * (1.0 - lam * lam));
  const double cs = std::cos(phi), sn = std::sin(phi);
  return {t * (ur * cs - uphi * sn), t * (ur * sn + uphi * cs)};
}

/// Translating mode-I crack-tip displacement field ("surfing" load): the
/// K-field of amplitude psi*K_Ic centered at (V*t, 0).
struct SurfingLoad {
  double psi = 1.0;
  double V = 1.0;
  double K_Ic = 1.0;
  double kappa = 0.0;  // Kolosov constant
  PlanarMode mode = PlanarMode::plane_strain;
};

inline SurfingLoad make_surfing_load(double psi, double V, const MaterialParams& m) {
  SurfingLoad sl;
  sl.psi = psi;
  sl.V = V;
  sl.K_Ic = std::sqrt(effective_modulus(m) * m.Gc);
  sl.kappa = m.mode == PlanarMode::plane_stress ? (3.0 - m.nu) / (1.0 + m.nu) : 3.0 - 4.0 * m.nu;
  sl.mode = m.mode;
  return sl;
}

inline Vec2 surfing_displacement(double x, double y, double t, const SurfingLoad& sl,
                                 const MaterialParams& m) {
  const double xs = x - sl.V * t;
  const double r = std::hypot(xs, y);
  if (r == 0.0) return {0.0, 0.0};
  const double phi = std::atan2(y, xs);
  const double amp = sl.psi * sl.K_Ic * (1.0 + m.nu) / m.E * (sl.kappa - std::cos(phi)) *
                     std::sqrt(r / (2.0 * std::numbers::pi));
  return {amp * std::cos(0.5 * phi), amp * std::sin(0.5 * phi)};
}

}  // namespace epfrac
