#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <vector>

#include "epfrac/material.hpp"
#include "epfrac/tensor.hpp"

namespace epfrac {

enum class EdgeTag : uint8_t { outer_dirichlet, notch_flank };

struct BoundaryEdge {
  int n0 = -1;  // oriented so the interior lies on the left
  int n1 = -1;
  int tri = -1;
  EdgeTag tag = EdgeTag::outer_dirichlet;
};

/// Linear-triangle mesh with per-element constant strain-displacement data
/// and tagged boundary edges. Immutable after generation.
struct MeshP1 {
  std::vector<Vec2> X;
  std::vector<std::array<int, 3>> tri;
  std::vector<double> area;
  std::vector<std::array<double, 6>> dN;  // gradient of each basis: (dN0x, dN0y, dN1x, ...)
  std::vector<BoundaryEdge> bedges;
  std::vector<uint8_t> on_boundary;
  std::vector<uint8_t> precrack;  // nodes seeding the initial crack

  int num_nodes() const { return static_cast<int>(X.size()); }
  int num_elements() const { return static_cast<int>(tri.size()); }

  Vec2 centroid(int e) const {
    const auto& t = tri[e];
    return (X[t[0]] + X[t[1]] + X[t[2]]) * (1.0 / 3.0);
  }

  double total_area() const {
    double s = 0.0;
    for (double a : area) s += a;
    return s;
  }

  /// Constant in-plane strain of element e under nodal displacements u
  /// (layout u[2i], u[2i+1]).
  Sym2 element_strain(int e, const std::vector<double>& u) const {
    const auto& t = tri[e];
    const auto& g = dN[e];
    Sym2 s;
    for (int k = 0; k < 3; ++k) {
      const double ux = u[2 * t[k]];
      const double uy = u[2 * t[k] + 1];
      s.xx += g[2 * k] * ux;
      s.yy += g[2 * k + 1] * uy;
      s.xy += 0.5 * (g[2 * k + 1] * ux + g[2 * k] * uy);
    }
    return s;
  }

  /// Displacement gradient of element e: {ux_x, ux_y, uy_x, uy_y}.
  std::array<double, 4> grad_u(int e, const std::vector<double>& u) const {
    const auto& t = tri[e];
    const auto& g = dN[e];
    std::array<double, 4> gu{0.0, 0.0, 0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
      const double ux = u[2 * t[k]];
      const double uy = u[2 * t[k] + 1];
      gu[0] += g[2 * k] * ux;
      gu[1] += g[2 * k + 1] * ux;
      gu[2] += g[2 * k] * uy;
      gu[3] += g[2 * k + 1] * uy;
    }
    return gu;
  }

  /// Lumped nodal area (one third of each adjacent element).
  std::vector<double> lumped_node_area() const {
    std::vector<double> m(X.size(), 0.0);
    for (int e = 0; e < num_elements(); ++e)
      for (int k = 0; k < 3; ++k) m[tri[e][k]] += area[e] / 3.0;
    return m;
  }

  double min_angle_deg() const {
    double worst = 180.0;
    for (const auto& t : tri) {
      const Vec2 a = X[t[0]], b = X[t[1]], c = X[t[2]];
      const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
      const auto ang = [](double opp, double s1, double s2) {
        return std::acos(std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0));
      };
      const double amin = std::min({ang(la, lb, lc), ang(lb, lc, la), ang(lc, la, lb)});
      worst = std::min(worst, amin * 180.0 / std::numbers::pi);
    }
    return worst;
  }

  /// Boundary edges must form closed loops: every boundary node has exactly
  /// one outgoing and one incoming oriented edge.
  bool boundary_closed() const {
    std::map<int, int> out, in;
    for (const auto& be : bedges) {
      out[be.n0]++;
      in[be.n1]++;
    }
    if (out.size() != in.size()) return false;
    for (const auto& [n, c] : out) {
      if (c != 1) return false;
      auto it = in.find(n);
      if (it == in.end() || it->second != 1) return false;
    }
    return true;
  }
};

namespace detail {

inline void finalize_geometry(MeshP1& mesh) {
  const int ne = mesh.num_elements();
  mesh.area.resize(ne);
  mesh.dN.resize(ne);
  for (int e = 0; e < ne; ++e) {
    auto& t = mesh.tri[e];
    Vec2 a = mesh.X[t[0]], b = mesh.X[t[1]], c = mesh.X[t[2]];
    double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    if (det < 0.0) {  // enforce CCW
      std::swap(t[1], t[2]);
      std::swap(b, c);
      det = -det;
    }
    require(det > 0.0, "mesh: degenerate triangle");
    mesh.area[e] = 0.5 * det;
    mesh.dN[e] = {(b.y - c.y) / det, (c.x - b.x) / det,
                  (c.y - a.y) / det, (a.x - c.x) / det,
                  (a.y - b.y) / det, (b.x - a.x) / det};
  }
}

/// Extract boundary edges from triangle adjacency; each boundary edge is
/// owned by exactly one triangle and oriented with the interior on its left.
inline void extract_boundary(MeshP1& mesh) {
  std::map<std::pair<int, int>, std::pair<int, int>> once;  // (lo,hi) -> (tri, oriented n0)
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.tri[e];
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      const auto key = std::minmax(a, b);
      auto it = once.find(key);
      if (it == once.end())
        once[key] = {e, a};
      else
        it->second.first = -1;  // interior edge, seen twice
    }
  }
  mesh.bedges.clear();
  for (const auto& [key, val] : once) {
    if (val.first < 0) continue;
    BoundaryEdge be;
    be.tri = val.first;
    be.n0 = val.second;
    be.n1 = (val.second == key.first) ? key.second : key.first;
    mesh.bedges.push_back(be);
  }
  mesh.on_boundary.assign(mesh.X.size(), 0);
  for (const auto& be : mesh.bedges) {
    mesh.on_boundary[be.n0] = 1;
    mesh.on_boundary[be.n1] = 1;
  }
}

}  // namespace detail

/// Structured triangulation of [0,L] x [-H/2,H/2]; each grid cell is split
/// into two triangles, mirrored about the midline y=0 so the mesh (and any
/// symmetric solution) is symmetric about the crack plane. Nodes on y=0 with
/// x <= xi0 are flagged as pre-crack support.
inline MeshP1 mesh_rectangle(double L, double H, double delta, double precrack_len = 0.0) {
  require(L > 0.0 && H > 0.0 && delta > 0.0, "mesh_rectangle: dimensions must be positive");
  require(precrack_len >= 0.0 && precrack_len < L, "mesh_rectangle: invalid pre-crack length");
  require(delta <= std::min(L, H) / 4.0, "mesh_rectangle: delta too coarse for the domain");

  const int nx = std::max(1, static_cast<int>(std::lround(L / delta)));
  const int ny = 2 * std::max(1, static_cast<int>(std::lround(H / (2.0 * delta))));
  const double hx = L / nx, hy = H / ny;

  MeshP1 mesh;
  mesh.X.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.X.push_back({i * hx, -0.5 * H + j * hy});

  const auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  mesh.tri.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      const double yc = -0.5 * H + (j + 0.5) * hy;
      if (yc < 0.0) {
        mesh.tri.push_back({a, b, c});
        mesh.tri.push_back({a, c, d});
      } else {
        mesh.tri.push_back({a, b, d});
        mesh.tri.push_back({b, c, d});
      }
    }
  }

  detail::finalize_geometry(mesh);
  detail::extract_boundary(mesh);
  for (auto& be : mesh.bedges) be.tag = EdgeTag::outer_dirichlet;

  mesh.precrack.assign(mesh.X.size(), 0);
  const double tol = 1e-9 * std::max(L, H);
  for (int i = 0; i < mesh.num_nodes(); ++i)
    if (std::fabs(mesh.X[i].y) <= tol && mesh.X[i].x <= precrack_len + tol) mesh.precrack[i] = 1;
  return mesh;
}

struct NotchGeometry {
  double omega_bar = 0.0;  // notch half-angle, radians
  double R = 0.0;          // outer radius, tip at the origin

  void validate() const {
    if (!(omega_bar > 0.0 && omega_bar <= std::numbers::pi / 2.0))
      throw std::invalid_argument("NotchGeometry: omega_bar must lie in (0, pi/2]");
    if (!(R > 0.0)) throw std::invalid_argument("NotchGeometry: R must be positive");
  }
};

struct NotchMeshOptions {
  double delta_tip = 0.0;
  double delta_far = 0.0;
  double grade = 0.25;       // edge growth rate with radius
  double fine_radius = 0.0;  // keep edge ~ delta_tip out to this radius
};

/// Graded polar mesh of the disk sector {r <= R, |phi| <= pi - omega_bar}.
/// Rings are graded radially; the azimuthal count doubles when sectors grow
/// too wide. Outer arc edges are tagged Dirichlet, the notch flanks
/// traction-free.
inline MeshP1 mesh_notch(const NotchGeometry& g, const NotchMeshOptions& opt) {
  g.validate();
  require(opt.delta_tip > 0.0 && opt.delta_far >= opt.delta_tip, "mesh_notch: need 0 < delta_tip <= delta_far");
  require(opt.delta_far < g.R, "mesh_notch: delta_far must be smaller than R");
  require(opt.grade > 0.0, "mesh_notch: grade must be positive");

  const double beta = std::numbers::pi - g.omega_bar;
  const auto edge_target = [&](double r) {
    return std::min(opt.delta_far, opt.delta_tip + opt.grade * std::max(0.0, r - opt.fine_radius));
  };

  MeshP1 mesh;
  mesh.X.push_back({0.0, 0.0});  // tip

  const auto ring_nodes = [&](double r, int nseg, std::vector<int>& ids) {
    ids.resize(nseg + 1);
    for (int j = 0; j <= nseg; ++j) {
      const double phi = -beta + 2.0 * beta * j / nseg;
      ids[j] = mesh.num_nodes();
      mesh.X.push_back({r * std::cos(phi), r * std::sin(phi)});
    }
  };
  const auto add_tri = [&](int a, int b, int c) { mesh.tri.push_back({a, b, c}); };

  int nseg = std::max(4, 2 * static_cast<int>(std::ceil(beta / 0.22)));  // fan apex ~12.6 deg
  std::vector<int> inner, outer;
  double r = opt.delta_tip;
  ring_nodes(r, nseg, inner);
  for (int j = 0; j < nseg; ++j) add_tri(0, inner[j], inner[j + 1]);

  while (r < g.R) {
    double dr = edge_target(r);
    double rn = r + dr;
    if (rn > g.R - 0.45 * dr) rn = g.R;
    int nn = nseg;
    if (2.0 * beta * rn / nseg > 1.45 * edge_target(rn)) nn = 2 * nseg;
    ring_nodes(rn, nn, outer);
    if (nn == nseg) {
      for (int j = 0; j < nseg; ++j) {
        const double mid = -beta + 2.0 * beta * (j + 0.5) / nseg;
        if (mid < 0.0) {
          add_tri(inner[j], inner[j + 1], outer[j + 1]);
          add_tri(inner[j], outer[j + 1], outer[j]);
        } else {
          add_tri(inner[j], inner[j + 1], outer[j]);
          add_tri(inner[j + 1], outer[j + 1], outer[j]);
        }
      }
    } else {
      for (int j = 0; j < nseg; ++j) {
        add_tri(inner[j], outer[2 * j], outer[2 * j + 1]);
        add_tri(inner[j], outer[2 * j + 1], inner[j + 1]);
        add_tri(inner[j + 1], outer[2 * j + 1], outer[2 * j + 2]);
      }
    }
    inner = outer;
    nseg = nn;
    r = rn;
  }

  detail::finalize_geometry(mesh);
  detail::extract_boundary(mesh);

  const double rtol = 1e-7 * g.R;
  const auto on_flank = [&](const Vec2& p) {
    const double rr = p.norm();
    if (rr <= rtol) return true;  // tip belongs to both flanks
    return std::fabs(std::fabs(std::atan2(p.y, p.x)) - beta) <= 1e-6;
  };
  for (auto& be : mesh.bedges) {
    const Vec2 a = mesh.X[be.n0], b = mesh.X[be.n1];
    if (a.norm() >= g.R - rtol && b.norm() >= g.R - rtol)
      be.tag = EdgeTag::outer_dirichlet;
    else if (on_flank(a) && on_flank(b))
      be.tag = EdgeTag::notch_flank;
    else
      throw std::runtime_error("mesh_notch: unclassified boundary edge");
  }
  mesh.precrack.assign(mesh.X.size(), 0);
  return mesh;
}

/// Seed field for a straight pre-crack along {y = 0, 0 <= x <= xi0}:
/// alpha = 1 within ell/2 of the segment, decaying with the optimal damage
/// profile beyond. Used as the initial lower bound of the damage field.
inline std::vector<double> precrack_seed(const MeshP1& mesh, double xi0, double ell) {
  std::vector<double> a0(mesh.X.size(), 0.0);
  if (xi0 <= 0.0) return a0;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const Vec2 p = mesh.X[i];
    const double dx = p.x < 0.0 ? -p.x : (p.x > xi0 ? p.x - xi0 : 0.0);
    const double d = std::hypot(dx, p.y);
    if (d <= 0.5 * ell)
      a0[i] = 1.0;
    else {
      const double s = (d - 0.5 * ell) / (2.0 * ell);
      a0[i] = s >= 1.0 ? 0.0 : (1.0 - s) * (1.0 - s);
    }
  }
  return a0;
}

}  // namespace epfrac
