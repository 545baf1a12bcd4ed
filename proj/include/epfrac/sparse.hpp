#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <utility>
#include <vector>

#include "epfrac/material.hpp"

namespace epfrac {

/// Compressed sparse row matrix with a fixed symmetric pattern. Values are
/// rebuilt in place between solves; the pattern is built once per mesh.
struct CsrMatrix {
  int n = 0;
  std::vector<int> rowptr;
  std::vector<int> col;
  std::vector<double> val;

  /// Build the pattern from an (unsorted, possibly duplicated) list of
  /// (row, col) pairs. Diagonal entries are always included.
  static CsrMatrix pattern_from_pairs(int n, std::vector<std::pair<int, int>> pairs) {
    for (int i = 0; i < n; ++i) pairs.emplace_back(i, i);
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    CsrMatrix a;
    a.n = n;
    a.rowptr.assign(n + 1, 0);
    for (const auto& p : pairs) a.rowptr[p.first + 1]++;
    for (int i = 0; i < n; ++i) a.rowptr[i + 1] += a.rowptr[i];
    a.col.resize(pairs.size());
    for (size_t k = 0; k < pairs.size(); ++k) a.col[k] = pairs[k].second;
    a.val.assign(pairs.size(), 0.0);
    return a;
  }

  int find(int r, int c) const {
    const int* b = col.data() + rowptr[r];
    const int* e = col.data() + rowptr[r + 1];
    const int* it = std::lower_bound(b, e, c);
    require(it != e && *it == c, "CsrMatrix: entry outside pattern");
    return static_cast<int>(it - col.data());
  }

  void zero() { std::fill(val.begin(), val.end(), 0.0); }

  void matvec(const std::vector<double>& x, std::vector<double>& y) const {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = rowptr[i]; k < rowptr[i + 1]; ++k) s += val[k] * x[col[k]];
      y[i] = s;
    }
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = rowptr[i]; k < rowptr[i + 1]; ++k)
        if (col[k] == i) d[i] = val[k];
    return d;
  }
};

struct CgResult {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients restricted to the unmasked
/// entries of x (mask == 1 means free). Fixed entries of x are untouched and
/// act as Dirichlet data; algebraically this is CG on the reduced SPD system
/// with the constrained columns moved to the right-hand side.
class PcgSolver {
 public:
  CgResult solve(const CsrMatrix& a, const std::vector<double>& b, std::vector<double>& x,
                 const std::vector<uint8_t>& mask, double rel_tol, int max_iter) {
    const int n = a.n;
    r_.assign(n, 0.0);
    z_.assign(n, 0.0);
    p_.assign(n, 0.0);
    ap_.assign(n, 0.0);

    std::vector<double> diag = a.diagonal();
    for (int i = 0; i < n; ++i)
      if (!(std::fabs(diag[i]) > 0.0)) diag[i] = 1.0;

    a.matvec(x, r_);
    double bnorm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      r_[i] = mask[i] ? b[i] - r_[i] : 0.0;
      if (mask[i]) bnorm2 += b[i] * b[i];
    }
    double rnorm2 = 0.0;
    for (int i = 0; i < n; ++i) rnorm2 += r_[i] * r_[i];
    const double ref = std::sqrt(std::max(bnorm2, rnorm2));
    CgResult res;
    if (ref == 0.0 || std::sqrt(rnorm2) <= rel_tol * ref) {
      res.converged = true;
      res.rel_residual = ref == 0.0 ? 0.0 : std::sqrt(rnorm2) / ref;
      return res;
    }

    double rz = 0.0;
    for (int i = 0; i < n; ++i) {
      z_[i] = mask[i] ? r_[i] / diag[i] : 0.0;
      rz += r_[i] * z_[i];
    }
    p_ = z_;

    for (int it = 1; it <= max_iter; ++it) {
      a.matvec(p_, ap_);
      double pap = 0.0;
      for (int i = 0; i < n; ++i)
        if (mask[i]) pap += p_[i] * ap_[i];
      if (!(pap > 0.0)) {
        res.iterations = it;
        res.rel_residual = std::sqrt(rnorm2) / ref;
        return res;  // not SPD on the free set; report non-convergence
      }
      const double alpha = rz / pap;
      rnorm2 = 0.0;
      for (int i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        x[i] += alpha * p_[i];
        r_[i] -= alpha * ap_[i];
        rnorm2 += r_[i] * r_[i];
      }
      res.iterations = it;
      if (std::sqrt(rnorm2) <= rel_tol * ref) {
        res.converged = true;
        res.rel_residual = std::sqrt(rnorm2) / ref;
        return res;
      }
      double rz_new = 0.0;
      for (int i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        z_[i] = r_[i] / diag[i];
        rz_new += r_[i] * z_[i];
      }
      const double beta = rz_new / rz;
      rz = rz_new;
      for (int i = 0; i < n; ++i) p_[i] = mask[i] ? z_[i] + beta * p_[i] : 0.0;
    }
    res.rel_residual = std::sqrt(rnorm2) / ref;
    return res;
  }

 private:
  std::vector<double> r_, z_, p_, ap_;
};

inline std::string cg_failure_message(const char* what, const CgResult& r) {
  std::ostringstream os;
  os << what << ": conjugate gradients failed to converge after " << r.iterations
     << " iterations (relative residual " << r.rel_residual << ")";
  return os.str();
}

}  // namespace epfrac
