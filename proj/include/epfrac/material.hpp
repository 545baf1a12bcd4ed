#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "epfrac/tensor.hpp"

namespace epfrac {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

enum class PlanarMode { plane_stress, plane_strain };

inline std::string to_string(PlanarMode m) {
  return m == PlanarMode::plane_stress ? "plane-stress" : "plane-strain";
}

/// AT1 gradient-damage model constants and degradation functions.
/// a(d) scales the elastic stiffness, b(d) the plastic dissipation,
/// w(d) = d is the local part of the surface energy density.
inline constexpr double kCw = 2.0 / 3.0;

inline double degr_a(double d, double eta) { return eta + (1.0 - d) * (1.0 - d); }
inline double degr_b(double d) { return (1.0 - d) * (1.0 - d); }
inline double damage_w(double d) { return d; }

struct MaterialParams {
  double E = 1.0;          // Young modulus (non-dimensional)
  double nu = 0.2;         // Poisson ratio
  double Gc = 1.0;         // critical energy release rate
  double ell = 0.25;       // damage regularization length
  double sigma0 = 0.5;     // von Mises yield strength
  double eta = 1e-6;       // residual stiffness factor
  PlanarMode mode = PlanarMode::plane_strain;

  void validate() const {
    if (!(E > 0.0)) throw std::invalid_argument("MaterialParams: E must be positive");
    if (!(nu > -1.0 && nu < 0.5)) throw std::invalid_argument("MaterialParams: nu must lie in (-1, 0.5)");
    if (!(Gc > 0.0)) throw std::invalid_argument("MaterialParams: Gc must be positive");
    if (!(ell > 0.0)) throw std::invalid_argument("MaterialParams: ell must be positive");
    if (!(sigma0 > 0.0)) throw std::invalid_argument("MaterialParams: sigma0 must be positive");
    if (!(eta > 0.0 && eta < 0.1)) throw std::invalid_argument("MaterialParams: eta must lie in (0, 0.1)");
  }
};

/// Quantities derived from the material parameters and the mesh size.
struct DerivedParams {
  double Eprime = 0.0;   // effective modulus (mode dependent)
  double sigma_c = 0.0;  // uniaxial nucleation stress
  double r_y = 0.0;      // ductility ratio sigma_c / sigma0
  double Gc_num = 0.0;   // mesh-corrected toughness
  double K_Ic = 0.0;     // sqrt(Eprime * Gc)
};

inline double effective_modulus(const MaterialParams& m) {
  return m.mode == PlanarMode::plane_stress ? m.E : m.E / (1.0 - m.nu * m.nu);
}

inline double nucleation_stress(const MaterialParams& m) {
  return std::sqrt(3.0 * m.Gc * effective_modulus(m) / (8.0 * m.ell));
}

inline double numerical_toughness(double Gc, double ell, double delta) {
  return Gc * (1.0 + delta / (4.0 * kCw * ell));
}

/// Derive sigma_c, r_y, Gc_num and K_Ic. `warn`, when non-null, receives a
/// message if the mesh-size correction is unreasonably large (the formulas
/// stay valid, so this is not an error).
inline DerivedParams derive_params(const MaterialParams& m, double delta, std::string* warn = nullptr) {
  m.validate();
  if (!(delta > 0.0)) throw std::invalid_argument("derive_params: delta must be positive");
  DerivedParams d;
  d.Eprime = effective_modulus(m);
  d.sigma_c = nucleation_stress(m);
  d.r_y = d.sigma_c / m.sigma0;
  d.Gc_num = numerical_toughness(m.Gc, m.ell, delta);
  d.K_Ic = std::sqrt(d.Eprime * m.Gc);
  if (warn && delta >= 4.0 * kCw * m.ell)
    *warn = "derive_params: delta >= 4*c_w*ell, mesh-size toughness correction exceeds 100%";
  return d;
}

/// Isotropic plane elasticity. Works on Sym2 tensors carrying the
/// out-of-plane normal component; the reduced in-plane stiffness is exposed
/// for assembly.
struct Elasticity {
  double E = 0.0;
  double nu = 0.0;
  double lambda = 0.0;  // Lame
  double mu = 0.0;
  PlanarMode mode = PlanarMode::plane_strain;

  static Elasticity from(const MaterialParams& m) {
    Elasticity el;
    el.E = m.E;
    el.nu = m.nu;
    el.lambda = m.E * m.nu / ((1.0 + m.nu) * (1.0 - 2.0 * m.nu));
    el.mu = m.E / (2.0 * (1.0 + m.nu));
    el.mode = m.mode;
    return el;
  }

  /// Full 3D isotropic stress of an elastic strain (undegraded).
  Sym2 stress3(const Sym2& ee) const {
    const double lt = lambda * ee.trace();
    return {lt + 2.0 * mu * ee.xx, lt + 2.0 * mu * ee.yy, 2.0 * mu * ee.xy, lt + 2.0 * mu * ee.zz};
  }

  /// Undegraded elastic energy density of an elastic strain.
  double psi0(const Sym2& ee) const {
    const double t = ee.trace();
    return 0.5 * lambda * t * t + mu * ee.ddot(ee);
  }

  /// Out-of-plane elastic strain that enforces sigma_zz = 0 given the
  /// in-plane elastic strains (plane stress only).
  double zz_from_plane_stress(double ee_xx, double ee_yy) const {
    return -lambda / (lambda + 2.0 * mu) * (ee_xx + ee_yy);
  }

  /// Elastic strain tensor for in-plane total strain `e` and plastic strain
  /// `ep`, with the out-of-plane component set by the planar mode.
  Sym2 elastic_strain(const Sym2& e, const Sym2& ep) const {
    Sym2 ee{e.xx - ep.xx, e.yy - ep.yy, e.xy - ep.xy, 0.0};
    if (mode == PlanarMode::plane_strain)
      ee.zz = -ep.zz;  // total eps_zz = 0
    else
      ee.zz = zz_from_plane_stress(ee.xx, ee.yy);
    return ee;
  }

  /// Reduced in-plane stiffness (Voigt, engineering shear): c11, c12, c33.
  void reduced_stiffness(double& c11, double& c12, double& c33) const {
    if (mode == PlanarMode::plane_strain) {
      c11 = lambda + 2.0 * mu;
      c12 = lambda;
    } else {
      c11 = E / (1.0 - nu * nu);
      c12 = nu * E / (1.0 - nu * nu);
    }
    c33 = mu;
  }

  /// In-plane stress at zero total strain for a given plastic strain
  /// (prestress entering the equilibrium right-hand side), Voigt order
  /// (sxx, syy, sxy).
  void prestress(const Sym2& ep, double& sxx, double& syy, double& sxy) const {
    const Sym2 ee = elastic_strain(Sym2{}, ep);
    const Sym2 s = stress3(ee);
    sxx = s.xx;
    syy = s.yy;
    sxy = s.xy;
  }
};

}  // namespace epfrac
