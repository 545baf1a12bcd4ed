#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "epfrac/constitutive.hpp"
#include "epfrac/mesh.hpp"

namespace epfrac {

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

struct LedgerRow {
  int step = 0;
  double t = 0.0;
  double elastic = 0.0;
  double surface = 0.0;
  double plastic = 0.0;
  double total = 0.0;
  double J = 0.0;
  double tip_x = 0.0;
  double crack_len = 0.0;
  double frac_extent = 0.0;
  double max_alpha = 0.0;
  double max_alpha_ahead = 0.0;
  double h_p = 0.0;
  double plastic_area = 0.0;
  double k = std::numeric_limits<double>::quiet_NaN();
  double k_residual = std::numeric_limits<double>::quiet_NaN();
  int k_warn = 0;
  int am_iters = 0;
  int halvings = 0;
};

struct Ledger {
  std::vector<LedgerRow> rows;

  static const char* header() {
    return "step,t,elastic,surface,plastic,total,J,tip_x,crack_len,frac_extent,"
           "max_alpha,max_alpha_ahead,h_p,plastic_area,k,k_residual,k_warn,am_iters,halvings";
  }

  void write_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "w");
    require(f != nullptr, "ledger: cannot open " + path + " for writing");
    std::fprintf(f, "%s\n", header());
    for (const auto& r : rows)
      std::fprintf(f,
                   "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                   "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d\n",
                   r.step, r.t, r.elastic, r.surface, r.plastic, r.total, r.J, r.tip_x,
                   r.crack_len, r.frac_extent, r.max_alpha, r.max_alpha_ahead, r.h_p,
                   r.plastic_area, r.k, r.k_residual, r.k_warn, r.am_iters, r.halvings);
    std::fclose(f);
  }

  static Ledger read_csv(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "ledger: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), "ledger: empty file " + path);
    require(Config_trim(line) == header(), "ledger: unexpected schema in " + path);
    Ledger led;
    while (std::getline(is, line)) {
      if (Config_trim(line).empty()) continue;
      LedgerRow r;
      std::vector<double> v;
      size_t pos = 0;
      while (pos <= line.size()) {
        const size_t c = line.find(',', pos);
        const std::string tok = line.substr(pos, c == std::string::npos ? c : c - pos);
        v.push_back(std::strtod(tok.c_str(), nullptr));
        if (c == std::string::npos) break;
        pos = c + 1;
      }
      require(v.size() == 19, "ledger: malformed row in " + path);
      r.step = static_cast<int>(v[0]);
      r.t = v[1];
      r.elastic = v[2];
      r.surface = v[3];
      r.plastic = v[4];
      r.total = v[5];
      r.J = v[6];
      r.tip_x = v[7];
      r.crack_len = v[8];
      r.frac_extent = v[9];
      r.max_alpha = v[10];
      r.max_alpha_ahead = v[11];
      r.h_p = v[12];
      r.plastic_area = v[13];
      r.k = v[14];
      r.k_residual = v[15];
      r.k_warn = static_cast<int>(v[16]);
      r.am_iters = static_cast<int>(v[17]);
      r.halvings = static_cast<int>(v[18]);
      led.rows.push_back(r);
    }
    return led;
  }

 private:
  static std::string Config_trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }
};

// ---------------------------------------------------------------------------
// J-integral
// ---------------------------------------------------------------------------

struct ContourSegment {
  int n0 = -1, n1 = -1;
  int tri_a = -1;  // adjacent element(s); tri_b < 0 on the domain boundary
  int tri_b = -1;
  Vec2 normal;  // outward from the enclosed region
  double len = 0.0;
};

struct ContourSpec {
  std::vector<ContourSegment> segs;

  bool closed() const {
    std::map<int, int> deg;
    for (const auto& s : segs) {
      deg[s.n0]++;
      deg[s.n1]++;
    }
    for (const auto& [n, d] : deg)
      if (d != 2) return false;
    return !segs.empty();
  }
};

/// Contour along the full outer boundary (the usual choice: far from the
/// plastic region).
inline ContourSpec contour_outer(const MeshP1& mesh) {
  ContourSpec c;
  for (const auto& be : mesh.bedges) {
    ContourSegment s;
    s.n0 = be.n0;
    s.n1 = be.n1;
    s.tri_a = be.tri;
    const Vec2 t = mesh.X[be.n1] - mesh.X[be.n0];
    s.len = t.norm();
    s.normal = {t.y / s.len, -t.x / s.len};
    c.segs.push_back(s);
  }
  return c;
}

/// Axis-aligned contour inset by `margin` from the bounding box of a
/// structured rectangle mesh (used for path-robustness checks). Segment data
/// is averaged over both adjacent elements.
inline ContourSpec contour_rectangle_inset(const MeshP1& mesh, double margin) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& p : mesh.X) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double ax = x0 + margin, bx = x1 - margin, ay = y0 + margin, by = y1 - margin;
  require(ax < bx && ay < by, "contour_rectangle_inset: margin too large");
  const double tol = 1e-9 * std::max(x1 - x0, y1 - y0);
  const auto on_path = [&](const Vec2& p) {
    const bool inx = p.x >= ax - tol && p.x <= bx + tol;
    const bool iny = p.y >= ay - tol && p.y <= by + tol;
    const bool edge_x = (std::fabs(p.x - ax) <= tol || std::fabs(p.x - bx) <= tol) && iny;
    const bool edge_y = (std::fabs(p.y - ay) <= tol || std::fabs(p.y - by) <= tol) && inx;
    return edge_x || edge_y;
  };

  std::map<std::pair<int, int>, std::pair<int, int>> adj;  // (lo,hi) -> (triA, triB)
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (int k = 0; k < 3; ++k) {
      const auto key = std::minmax(mesh.tri[e][k], mesh.tri[e][(k + 1) % 3]);
      auto it = adj.find(key);
      if (it == adj.end())
        adj[key] = {e, -1};
      else
        it->second.second = e;
    }

  const Vec2 center{0.5 * (ax + bx), 0.5 * (ay + by)};
  ContourSpec c;
  for (const auto& [key, tris] : adj) {
    const Vec2 a = mesh.X[key.first], b = mesh.X[key.second];
    if (!on_path(a) || !on_path(b)) continue;
    if (std::fabs(a.x - b.x) > tol && std::fabs(a.y - b.y) > tol) continue;  // skip diagonals
    // skip edges lying inside the rectangle (on the path ring only)
    const Vec2 mid = (a + b) * 0.5;
    if (!on_path(mid)) continue;
    ContourSegment s;
    s.n0 = key.first;
    s.n1 = key.second;
    s.tri_a = tris.first;
    s.tri_b = tris.second;
    const Vec2 t = b - a;
    s.len = t.norm();
    Vec2 n{t.y / s.len, -t.x / s.len};
    if (n.dot(mid - center) < 0.0) n = {-n.x, -n.y};
    s.normal = n;
    c.segs.push_back(s);
  }
  require(c.closed(), "contour_rectangle_inset: contour is not closed");
  return c;
}

struct JResult {
  double J = 0.0;
  bool plastic_on_contour = false;
};

/// Contour J-integral by edge-wise midpoint quadrature: J = sum over edges of
/// (W n_x - sigma_ij u_i,x n_j) ds with W the degraded elastic energy density
/// of the adjacent element(s).
inline JResult j_integral(const MeshP1& mesh, const ContourSpec& contour,
                          const std::vector<double>& u, const std::vector<StressState>& stress,
                          const std::vector<double>& w_density,
                          const std::vector<double>& epeq_elem, double plastic_warn_tol = 1e-6) {
  JResult res;
  for (const auto& s : contour.segs) {
    const auto eval = [&](int e) {
      const auto gu = mesh.grad_u(e, u);
      const Sym2& sig = stress[e].sigma;
      const double tx = sig.xx * s.normal.x + sig.xy * s.normal.y;
      const double ty = sig.xy * s.normal.x + sig.yy * s.normal.y;
      if (epeq_elem[e] > plastic_warn_tol) res.plastic_on_contour = true;
      return w_density[e] * s.normal.x - (tx * gu[0] + ty * gu[2]);
    };
    double val = eval(s.tri_a);
    if (s.tri_b >= 0) val = 0.5 * (val + eval(s.tri_b));
    res.J += val * s.len;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Crack and process-zone metrics
// ---------------------------------------------------------------------------

struct CrackMetrics {
  double tip_x = 0.0;        // rightmost node with alpha >= complete threshold
  double crack_len = 0.0;
  double frac_extent = 0.0;  // rightmost node above the display threshold
  double max_alpha = 0.0;
  double max_alpha_ahead = 0.0;  // max alpha beyond the seeded region
  bool tip_defined = false;
};

inline CrackMetrics crack_metrics(const MeshP1& mesh, const std::vector<double>& alpha,
                                  double precrack_tip, double ahead_guard_x,
                                  double complete_thresh = 0.9, double display_thresh = 1e-3) {
  CrackMetrics cm;
  cm.tip_x = precrack_tip;
  cm.frac_extent = precrack_tip;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double a = alpha[i];
    cm.max_alpha = std::max(cm.max_alpha, a);
    if (mesh.X[i].x > ahead_guard_x) cm.max_alpha_ahead = std::max(cm.max_alpha_ahead, a);
    if (a >= complete_thresh && mesh.X[i].x > cm.tip_x) {
      cm.tip_x = mesh.X[i].x;
      cm.tip_defined = true;
    }
    if (a >= display_thresh) cm.frac_extent = std::max(cm.frac_extent, mesh.X[i].x);
  }
  if (!cm.tip_defined) cm.tip_x = precrack_tip;
  cm.crack_len = std::max(0.0, cm.tip_x);
  return cm;
}

/// Crack opening u_y(top) - u_y(bottom) sampled on the node rows nearest to
/// +/- y_off (structured rectangle meshes).
inline std::vector<std::pair<double, double>> opening_profile(const MeshP1& mesh,
                                                              const std::vector<double>& u,
                                                              double y_off) {
  double best_top = 1e300, best_bot = 1e300, ytop = 0.0, ybot = 0.0;
  for (const auto& p : mesh.X) {
    if (std::fabs(p.y - y_off) < best_top) {
      best_top = std::fabs(p.y - y_off);
      ytop = p.y;
    }
    if (std::fabs(p.y + y_off) < best_bot) {
      best_bot = std::fabs(p.y + y_off);
      ybot = p.y;
    }
  }
  std::map<double, double> top, bot;
  const double tol = 1e-9;
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (std::fabs(mesh.X[i].y - ytop) <= tol) top[mesh.X[i].x] = u[2 * i + 1];
    if (std::fabs(mesh.X[i].y - ybot) <= tol) bot[mesh.X[i].x] = u[2 * i + 1];
  }
  std::vector<std::pair<double, double>> prof;
  for (const auto& [x, uy] : top) {
    auto it = bot.find(x);
    if (it != bot.end()) prof.emplace_back(x, uy - it->second);
  }
  return prof;
}

struct PlasticZoneMetrics {
  double area = 0.0;
  double h_p = 0.0;
};

inline PlasticZoneMetrics plastic_zone_metrics(const MeshP1& mesh,
                                               const std::vector<double>& epeq_elem,
                                               double threshold = 1e-3) {
  PlasticZoneMetrics pz;
  double ymin = 1e300, ymax = -1e300;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (epeq_elem[e] < threshold) continue;
    pz.area += mesh.area[e];
    const double yc = mesh.centroid(e).y;
    ymin = std::min(ymin, yc);
    ymax = std::max(ymax, yc);
  }
  if (pz.area > 0.0) pz.h_p = ymax - ymin;
  return pz;
}

// ---------------------------------------------------------------------------
// Generalized stress intensity
// ---------------------------------------------------------------------------

struct HoopSample {
  double r = 0.0;
  double sig_phiphi = 0.0;
  double max_alpha = 0.0;
  double epeq = 0.0;
};

/// Hoop stress trace along the ray phi = 0 ahead of the tip, sampled on the
/// elements touching the ray (centroid values).
inline std::vector<HoopSample> hoop_trace(const MeshP1& mesh,
                                          const std::vector<StressState>& stress,
                                          const std::vector<double>& alpha,
                                          const std::vector<double>& epeq_elem) {
  std::vector<HoopSample> out;
  const double toly = 1e-12;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.tri[e];
    double ymin = 1e300, ymax = -1e300;
    for (int k = 0; k < 3; ++k) {
      ymin = std::min(ymin, mesh.X[t[k]].y);
      ymax = std::max(ymax, mesh.X[t[k]].y);
    }
    const Vec2 c = mesh.centroid(e);
    if (ymin > toly || ymax < -toly || c.x <= 0.0) continue;
    HoopSample s;
    s.r = c.norm();
    const double phi = std::atan2(c.y, c.x);
    const double sn = std::sin(phi), cs = std::cos(phi);
    const Sym2& sig = stress[e].sigma;
    s.sig_phiphi = sig.xx * sn * sn - 2.0 * sig.xy * sn * cs + sig.yy * cs * cs;
    for (int k = 0; k < 3; ++k) s.max_alpha = std::max(s.max_alpha, alpha[t[k]]);
    s.epeq = epeq_elem[e];
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const HoopSample& a, const HoopSample& b) { return a.r < b.r; });
  return out;
}

struct KFit {
  double k = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  int samples = 0;
  bool window_warn = false;  // window touches the damage or plastic zone
};

/// Least-squares fit of k = sig_phiphi * (2 pi r)^(1-lambda) over a radial
/// window of the hoop trace.
inline KFit k_factor(const std::vector<HoopSample>& trace, double lambda, double r_min,
                     double r_max, double alpha_warn = 0.1, double epeq_warn = 1e-3) {
  KFit fit;
  double sum = 0.0;
  std::vector<double> ks;
  for (const auto& s : trace) {
    if (s.r < r_min || s.r > r_max) continue;
    ks.push_back(s.sig_phiphi * std::pow(2.0 * std::numbers::pi * s.r, 1.0 - lambda));
    if (s.max_alpha >= alpha_warn || s.epeq >= epeq_warn) fit.window_warn = true;
    sum += ks.back();
  }
  fit.samples = static_cast<int>(ks.size());
  if (ks.empty()) return fit;
  fit.k = sum / fit.samples;
  double ss = 0.0;
  for (double k : ks) ss += (k - fit.k) * (k - fit.k);
  fit.residual = std::sqrt(ss / fit.samples) / std::max(std::fabs(fit.k), 1e-300);
  return fit;
}

// ---------------------------------------------------------------------------
// Field export (legacy VTK unstructured grid, ASCII)
// ---------------------------------------------------------------------------

inline void write_snapshot_vtk(const std::string& path, const MeshP1& mesh,
                               const std::vector<double>* u, const std::vector<double>* alpha,
                               const std::vector<std::pair<std::string, const std::vector<double>*>>&
                                   cell_fields) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  require(f != nullptr, "export_fields: cannot open " + path + " for writing");
  std::fprintf(f, "# vtk DataFile Version 2.0\nepfrac snapshot\nASCII\nDATASET UNSTRUCTURED_GRID\n");
  std::fprintf(f, "POINTS %d double\n", mesh.num_nodes());
  for (const auto& p : mesh.X) std::fprintf(f, "%.17g %.17g 0\n", p.x, p.y);
  std::fprintf(f, "CELLS %d %d\n", mesh.num_elements(), 4 * mesh.num_elements());
  for (const auto& t : mesh.tri) std::fprintf(f, "3 %d %d %d\n", t[0], t[1], t[2]);
  std::fprintf(f, "CELL_TYPES %d\n", mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) std::fprintf(f, "5\n");
  if (u || alpha) {
    std::fprintf(f, "POINT_DATA %d\n", mesh.num_nodes());
    if (alpha) {
      std::fprintf(f, "SCALARS alpha double 1\nLOOKUP_TABLE default\n");
      for (double a : *alpha) std::fprintf(f, "%.17g\n", a);
    }
    if (u) {
      std::fprintf(f, "VECTORS displacement double\n");
      for (int i = 0; i < mesh.num_nodes(); ++i)
        std::fprintf(f, "%.17g %.17g 0\n", (*u)[2 * i], (*u)[2 * i + 1]);
    }
  }
  if (!cell_fields.empty()) {
    std::fprintf(f, "CELL_DATA %d\n", mesh.num_elements());
    for (const auto& [name, data] : cell_fields) {
      require(data->size() == static_cast<size_t>(mesh.num_elements()),
              "export_fields: cell field size mismatch: " + name);
      std::fprintf(f, "SCALARS %s double 1\nLOOKUP_TABLE default\n", name.c_str());
      for (double v : *data) std::fprintf(f, "%.17g\n", v);
    }
  }
  std::fclose(f);
}

/// Minimal reader for the files written above: returns named point/cell
/// arrays (vectors flattened to x,y pairs).
inline std::map<std::string, std::vector<double>> read_snapshot_vtk(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "read_snapshot_vtk: cannot open " + path);
  std::map<std::string, std::vector<double>> out;
  std::string tok;
  int npoints = 0, ncells = 0;
  while (is >> tok) {
    if (tok == "POINTS") {
      is >> npoints >> tok;
      auto& pts = out["points"];
      pts.resize(3 * static_cast<size_t>(npoints));
      for (auto& v : pts) is >> v;
    } else if (tok == "CELLS") {
      int listlen = 0;
      is >> ncells >> listlen;
      auto& cells = out["cells"];
      cells.resize(static_cast<size_t>(listlen));
      for (auto& v : cells) is >> v;
    } else if (tok == "SCALARS") {
      std::string name, type;
      int comp = 0;
      is >> name >> type >> comp;
      is >> tok >> tok;  // LOOKUP_TABLE default
      const bool cell = out.count("last_was_cell_data") > 0;
      auto& arr = out[name];
      arr.resize(static_cast<size_t>(cell ? ncells : npoints) * comp);
      for (auto& v : arr) is >> v;
    } else if (tok == "VECTORS") {
      std::string name, type;
      is >> name >> type;
      auto& arr = out[name];
      arr.resize(3 * static_cast<size_t>(npoints));
      for (auto& v : arr) is >> v;
    } else if (tok == "CELL_DATA") {
      int n = 0;
      is >> n;
      out["last_was_cell_data"] = {1.0};
    } else if (tok == "POINT_DATA") {
      int n = 0;
      is >> n;
      out.erase("last_was_cell_data");
    }
  }
  out.erase("last_was_cell_data");
  return out;
}

}  // namespace epfrac
