#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "epfrac/constitutive.hpp"
#include "epfrac/mesh.hpp"
#include "epfrac/sparse.hpp"

namespace epfrac {

/// Displacement sub-minimization: sparse SPD system assembled from the
/// damage-degraded stiffness, plastic prestress on the right-hand side,
/// Dirichlet data imposed by elimination (free-set CG). The geometric
/// element stiffness is cached once; only the scalar degradation factor
/// changes between assemblies.
class DisplacementSolver {
 public:
  DisplacementSolver(const MeshP1& mesh, const Elasticity& el) : mesh_(mesh), el_(el) {
    const int ne = mesh.num_elements();
    const int ndof = 2 * mesh.num_nodes();
    ke_.resize(ne);
    double c11, c12, c33;
    el.reduced_stiffness(c11, c12, c33);
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<size_t>(ne) * 36);
    std::array<int, 6> dof{};
    for (int e = 0; e < ne; ++e) {
      const auto& g = mesh.dN[e];
      // B (3x6): strain rows (xx, yy, engineering shear)
      double B[3][6] = {{g[0], 0, g[2], 0, g[4], 0},
                        {0, g[1], 0, g[3], 0, g[5]},
                        {g[1], g[0], g[3], g[2], g[5], g[4]}};
      double CB[3][6];
      for (int j = 0; j < 6; ++j) {
        CB[0][j] = c11 * B[0][j] + c12 * B[1][j];
        CB[1][j] = c12 * B[0][j] + c11 * B[1][j];
        CB[2][j] = c33 * B[2][j];
      }
      auto& ke = ke_[e];
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          double s = 0.0;
          for (int k = 0; k < 3; ++k) s += B[k][i] * CB[k][j];
          ke[6 * i + j] = mesh.area[e] * s;
        }
      for (int k = 0; k < 3; ++k) {
        dof[2 * k] = 2 * mesh.tri[e][k];
        dof[2 * k + 1] = 2 * mesh.tri[e][k] + 1;
      }
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) pairs.emplace_back(dof[i], dof[j]);
    }
    k_ = CsrMatrix::pattern_from_pairs(ndof, std::move(pairs));
    slot_.resize(static_cast<size_t>(ne) * 36);
    for (int e = 0; e < ne; ++e) {
      for (int k = 0; k < 3; ++k) {
        dof[2 * k] = 2 * mesh.tri[e][k];
        dof[2 * k + 1] = 2 * mesh.tri[e][k] + 1;
      }
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
          slot_[static_cast<size_t>(e) * 36 + 6 * i + j] = k_.find(dof[i], dof[j]);
    }
    rhs_.assign(ndof, 0.0);
  }

  /// Rebuild matrix and right-hand side for the per-element degradation
  /// factors `a_elem` and plastic strains.
  void assemble(const std::vector<double>& a_elem, const std::vector<PlasticState>& plastic) {
    k_.zero();
    std::fill(rhs_.begin(), rhs_.end(), 0.0);
    const int ne = mesh_.num_elements();
    for (int e = 0; e < ne; ++e) {
      const double a = a_elem[e];
      const auto& ke = ke_[e];
      const size_t base = static_cast<size_t>(e) * 36;
      for (int k = 0; k < 36; ++k) k_.val[slot_[base + k]] += a * ke[k];

      double sxx, syy, sxy;
      el_.prestress(plastic[e].ep, sxx, syy, sxy);
      if (sxx == 0.0 && syy == 0.0 && sxy == 0.0) continue;
      const auto& g = mesh_.dN[e];
      const double w = -mesh_.area[e] * a;
      for (int k = 0; k < 3; ++k) {
        rhs_[2 * mesh_.tri[e][k]] += w * (g[2 * k] * sxx + g[2 * k + 1] * sxy);
        rhs_[2 * mesh_.tri[e][k] + 1] += w * (g[2 * k + 1] * syy + g[2 * k] * sxy);
      }
    }
  }

  /// Solve K u = rhs with Dirichlet data: free[i] == 0 marks a constrained
  /// dof whose value is already stored in u. Throws on CG failure.
  CgResult solve(std::vector<double>& u, const std::vector<uint8_t>& free_dof,
                 double rel_tol = 1e-8, int max_iter = 0) {
    int nfixed = 0;
    for (uint8_t f : free_dof) nfixed += (f == 0);
    require(nfixed >= 3, "solve_displacement: fewer than 3 constrained dofs (rigid modes)");
    if (max_iter <= 0) max_iter = std::max(1000, 20 * k_.n);
    CgResult res = cg_.solve(k_, rhs_, u, free_dof, rel_tol, max_iter);
    require(res.converged, cg_failure_message("solve_displacement", res));
    return res;
  }

  const CsrMatrix& matrix() const { return k_; }
  const std::vector<double>& rhs() const { return rhs_; }

 private:
  const MeshP1& mesh_;
  Elasticity el_;
  CsrMatrix k_;
  std::vector<std::array<double, 36>> ke_;
  std::vector<int> slot_;
  std::vector<double> rhs_;
  PcgSolver cg_;
};

}  // namespace epfrac
