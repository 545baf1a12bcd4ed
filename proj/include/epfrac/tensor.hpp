#pragma once

#include <cmath>

namespace epfrac {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Symmetric 2nd-order tensor restricted to planar kinematics: in-plane
/// components plus the out-of-plane normal component (out-of-plane shears
/// vanish identically in both plane stress and plane strain).
struct Sym2 {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;
  double zz = 0.0;

  Sym2 operator+(const Sym2& o) const { return {xx + o.xx, yy + o.yy, xy + o.xy, zz + o.zz}; }
  Sym2 operator-(const Sym2& o) const { return {xx - o.xx, yy - o.yy, xy - o.xy, zz - o.zz}; }
  Sym2 operator*(double s) const { return {xx * s, yy * s, xy * s, zz * s}; }

  double trace() const { return xx + yy + zz; }

  Sym2 dev() const {
    const double h = trace() / 3.0;
    return {xx - h, yy - h, xy, zz - h};
  }

  /// Full contraction a:b (the xy component counts twice).
  double ddot(const Sym2& o) const {
    return xx * o.xx + yy * o.yy + zz * o.zz + 2.0 * xy * o.xy;
  }

  double max_abs() const {
    double m = std::fabs(xx);
    m = std::max(m, std::fabs(yy));
    m = std::max(m, std::fabs(xy));
    return std::max(m, std::fabs(zz));
  }

  bool finite() const {
    return std::isfinite(xx) && std::isfinite(yy) && std::isfinite(xy) && std::isfinite(zz);
  }
};

inline Sym2 operator*(double s, const Sym2& t) { return t * s; }

/// von Mises equivalent stress sqrt(3/2 s:s) of the deviator.
inline double eq_stress(const Sym2& sig) {
  const Sym2 s = sig.dev();
  return std::sqrt(1.5 * s.ddot(s));
}

/// Equivalent (plastic) strain measure sqrt(2/3 e:e) of the deviator.
inline double eq_strain(const Sym2& eps) {
  const Sym2 e = eps.dev();
  return std::sqrt(2.0 / 3.0 * e.ddot(e));
}

}  // namespace epfrac
