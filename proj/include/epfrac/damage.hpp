#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "epfrac/mesh.hpp"
#include "epfrac/sparse.hpp"

namespace epfrac {

struct BoundQpInfo {
  int sweeps = 0;
  int cg_iterations = 0;
  double kkt_residual = 0.0;
};

/// Primal-dual active-set solver for min 1/2 x'Hx + g'x subject to
/// lb <= x <= ub, H sparse SPD. Active sets are updated in blocks from the
/// sign of the complementarity estimate; the free subsystem is solved by
/// masked Jacobi-CG warm-started from the current iterate. Terminates on the
/// KKT residual test: |grad| <= tol*scale on free nodes, grad >= -tol*scale
/// on lower-active nodes, grad <= tol*scale on upper-active nodes.
inline BoundQpInfo solve_bound_qp(const CsrMatrix& h, const std::vector<double>& g,
                                  const std::vector<double>& lb, const std::vector<double>& ub,
                                  std::vector<double>& x, double tol = 1e-8,
                                  int max_sweeps = 100) {
  const int n = h.n;
  std::vector<double> z(n), rhs(n);
  std::vector<uint8_t> free_mask(n, 1);
  const std::vector<double> diag = h.diagonal();
  PcgSolver cg;

  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::fabs(g[i]) + std::fabs(diag[i]));
  scale = std::max(scale, 1e-300);

  for (int i = 0; i < n; ++i) {
    require(lb[i] <= ub[i], "solve_bound_qp: lb > ub");
    x[i] = std::clamp(x[i], lb[i], ub[i]);
    rhs[i] = -g[i];
  }

  BoundQpInfo info;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    info.sweeps = sweep;
    h.matvec(x, z);
    for (int i = 0; i < n; ++i) z[i] += g[i];

    // Block active-set update from the complementarity sign.
    for (int i = 0; i < n; ++i) {
      const double c = std::max(diag[i], 1e-30);
      const bool lower = z[i] + c * (lb[i] - x[i]) > 0.0;
      const bool upper = z[i] + c * (ub[i] - x[i]) < 0.0;
      if (lower) {
        free_mask[i] = 0;
        x[i] = lb[i];
      } else if (upper) {
        free_mask[i] = 0;
        x[i] = ub[i];
      } else {
        free_mask[i] = 1;
      }
      if (lb[i] == ub[i]) {
        free_mask[i] = 0;
        x[i] = lb[i];
      }
    }

    CgResult r = cg.solve(h, rhs, x, free_mask, 1e-12, std::max(1000, 20 * n));
    info.cg_iterations += r.iterations;

    h.matvec(x, z);
    double kkt = 0.0;
    bool feasible = true;
    for (int i = 0; i < n; ++i) {
      z[i] += g[i];
      if (free_mask[i]) {
        kkt = std::max(kkt, std::fabs(z[i]));
        if (x[i] < lb[i] - tol || x[i] > ub[i] + tol) feasible = false;
      } else if (x[i] == lb[i]) {
        kkt = std::max(kkt, std::max(0.0, -z[i]));
      } else {
        kkt = std::max(kkt, std::max(0.0, z[i]));
      }
    }
    info.kkt_residual = kkt / scale;
    if (feasible && kkt <= tol * scale) {
      for (int i = 0; i < n; ++i) x[i] = std::clamp(x[i], lb[i], ub[i]);
      return info;
    }
  }
  throw std::runtime_error("solve_bound_qp: active-set loop failed to converge after " +
                           std::to_string(max_sweeps) + " sweeps (kkt residual " +
                           std::to_string(info.kkt_residual) + ")");
}

/// Damage sub-minimization on a P1 mesh (2D triangles) or a 1D segment mesh.
/// The quadratic form couples a lumped local term 2*(psi+p) with the exact
/// P1 gradient stiffness; the linear term carries the AT1 threshold.
class DamageModel {
 public:
  static DamageModel from_mesh(const MeshP1& mesh) {
    DamageModel dm;
    const int nn = mesh.num_nodes();
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<size_t>(mesh.num_elements()) * 9);
    for (const auto& t : mesh.tri)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) pairs.emplace_back(t[i], t[j]);
    dm.kgrad_ = CsrMatrix::pattern_from_pairs(nn, std::move(pairs));
    dm.m_.assign(nn, 0.0);
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto& t = mesh.tri[e];
      const auto& g = mesh.dN[e];
      const double a = mesh.area[e];
      for (int i = 0; i < 3; ++i) {
        dm.m_[t[i]] += a / 3.0;
        for (int j = 0; j < 3; ++j)
          dm.kgrad_.val[dm.kgrad_.find(t[i], t[j])] +=
              a * (g[2 * i] * g[2 * j] + g[2 * i + 1] * g[2 * j + 1]);
      }
      dm.cells_.push_back({{t[0], t[1], t[2]}, 3, a});
    }
    dm.finish();
    return dm;
  }

  /// 1D evaluation mode over a segment mesh given by sorted coordinates.
  static DamageModel from_segments(const std::vector<double>& x) {
    require(x.size() >= 2, "DamageModel: need at least one segment");
    DamageModel dm;
    const int nn = static_cast<int>(x.size());
    std::vector<std::pair<int, int>> pairs;
    for (int e = 0; e + 1 < nn; ++e) {
      pairs.emplace_back(e, e + 1);
      pairs.emplace_back(e + 1, e);
    }
    dm.kgrad_ = CsrMatrix::pattern_from_pairs(nn, std::move(pairs));
    dm.m_.assign(nn, 0.0);
    for (int e = 0; e + 1 < nn; ++e) {
      const double hseg = x[e + 1] - x[e];
      require(hseg > 0.0, "DamageModel: segment coordinates must increase");
      dm.m_[e] += 0.5 * hseg;
      dm.m_[e + 1] += 0.5 * hseg;
      dm.kgrad_.val[dm.kgrad_.find(e, e)] += 1.0 / hseg;
      dm.kgrad_.val[dm.kgrad_.find(e + 1, e + 1)] += 1.0 / hseg;
      dm.kgrad_.val[dm.kgrad_.find(e, e + 1)] -= 1.0 / hseg;
      dm.kgrad_.val[dm.kgrad_.find(e + 1, e)] -= 1.0 / hseg;
      dm.cells_.push_back({{e, e + 1, -1}, 2, hseg});
    }
    dm.finish();
    return dm;
  }

  int num_nodes() const { return kgrad_.n; }
  const std::vector<double>& lumped_mass() const { return m_; }

  /// Minimize the damage restriction of the energy: per-cell driving
  /// densities q = psi0 + p, irreversibility bound alpha >= lb, upper bound 1.
  BoundQpInfo solve(const std::vector<double>& q_cell, const std::vector<double>& lb,
                    std::vector<double>& alpha, double Gc, double ell, double tol = 1e-8,
                    int max_sweeps = 100) const {
    require(q_cell.size() == cells_.size(), "solve_damage: driving field size mismatch");
    require(lb.size() == static_cast<size_t>(kgrad_.n), "solve_damage: bound size mismatch");
    const int nn = kgrad_.n;
    std::vector<double> wq(nn, 0.0);
    for (size_t c = 0; c < cells_.size(); ++c) {
      const auto& cell = cells_[c];
      const double w = cell.w / cell.count;
      for (int k = 0; k < cell.count; ++k) wq[cell.n[k]] += w * q_cell[c];
    }
    CsrMatrix h = kgrad_;
    const double cgrad = 0.75 * Gc * ell;  // 2 * Gc/(4 c_w) * ell, c_w = 2/3
    for (auto& v : h.val) v *= cgrad;
    std::vector<double> g(nn);
    const double thresh = 3.0 * Gc / (8.0 * ell);  // Gc/(4 c_w ell)
    for (int i = 0; i < nn; ++i) {
      h.val[diag_slot_[i]] += 2.0 * wq[i];
      g[i] = m_[i] * thresh - 2.0 * wq[i];
      require(lb[i] >= 0.0 && lb[i] <= 1.0, "solve_damage: lower bound outside [0,1]");
    }
    std::vector<double> ub(nn, 1.0);
    return solve_bound_qp(h, g, lb, ub, alpha, tol, max_sweeps);
  }

  /// Regularized surface energy Gc/(4 c_w) * int(w(alpha)/ell + ell |grad
  /// alpha|^2) by exact P1 integration.
  double surface_energy(const std::vector<double>& alpha, double Gc, double ell) const {
    double local = 0.0;
    for (int i = 0; i < kgrad_.n; ++i) {
      require(alpha[i] >= -1e-12 && alpha[i] <= 1.0 + 1e-12, "surface_energy: alpha outside [0,1]");
      local += m_[i] * alpha[i];
    }
    double grad = 0.0;
    std::vector<double> ka(kgrad_.n);
    kgrad_.matvec(alpha, ka);
    for (int i = 0; i < kgrad_.n; ++i) grad += alpha[i] * ka[i];
    return 0.375 * Gc * (local / ell + ell * grad);
  }

 private:
  struct Cell {
    std::array<int, 3> n;
    int count;
    double w;
  };

  void finish() {
    diag_slot_.resize(kgrad_.n);
    for (int i = 0; i < kgrad_.n; ++i) diag_slot_[i] = kgrad_.find(i, i);
  }

  CsrMatrix kgrad_;
  std::vector<double> m_;
  std::vector<int> diag_slot_;
  std::vector<Cell> cells_;
};

}  // namespace epfrac
