#pragma once

// Test-only reference implementations. They follow the textbook definitions
// directly (recursion, dense expansion, set enumeration) and share no code
// paths with the library beyond its public types.

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "thbheat/hierarchy/space.hpp"

namespace oracle {

/// Recursive Cox-de Boor B-spline N_{i,p}(x); x == last knot is evaluated in
/// the last nonempty span.
inline double bspline(const std::vector<double> &U, int i, int p, double x) {
  if (p == 0) {
    const double lo = U[i];
    const double hi = U[i + 1];
    if (lo == hi) return 0.0;
    if (x >= lo && x < hi) return 1.0;
    if (x == U.back() && hi == U.back()) return 1.0;
    return 0.0;
  }
  double v = 0.0;
  const double d1 = U[i + p] - U[i];
  const double d2 = U[i + p + 1] - U[i + 1];
  if (d1 > 0) v += (x - U[i]) / d1 * bspline(U, i, p - 1, x);
  if (d2 > 0) v += (U[i + p + 1] - x) / d2 * bspline(U, i + 1, p - 1, x);
  return v;
}

inline int linear_scan_span(const std::vector<double> &U, int p, double x) {
  const int n = static_cast<int>(U.size()) - p - 1;
  int k = -1;
  for (int r = p; r < n; ++r) {
    if (U[r] <= x && x < U[r + 1]) k = r;
  }
  if (k < 0) {
    for (int r = n - 1; r >= p; --r) {
      if (U[r] < U[r + 1]) return r;
    }
  }
  return k;
}

/// Level-wise membership in the refined subdomains, derived from the active
/// cell list only: a level-l cell is in Omega^l iff no strict ancestor is active.
struct Subdomains {
  std::vector<std::vector<std::vector<bool>>> in;  // [level][i][j]
  std::vector<std::vector<std::vector<bool>>> act; // [level][i][j]
  int levels = 0;

  explicit Subdomains(const thbheat::HierarchicalSpace &sp) {
    const auto &mesh = sp.mesh();
    levels = mesh.max_levels();
    in.resize(levels);
    act.resize(levels);
    for (int l = 0; l < levels; ++l) {
      const auto &s = mesh.space(l);
      in[l].assign(s.cells_x(), std::vector<bool>(s.cells_y(), false));
      act[l].assign(s.cells_x(), std::vector<bool>(s.cells_y(), false));
    }
    for (const auto &c : mesh.active_cells()) act[c.level][c.i][c.j] = true;
    for (int l = 0; l < levels; ++l) {
      for (std::size_t i = 0; i < in[l].size(); ++i) {
        for (std::size_t j = 0; j < in[l][i].size(); ++j) {
          bool ok = true;
          for (int k = 0; k < l; ++k) {
            const int s = l - k;
            if (act[k][i >> s][j >> s]) ok = false;
          }
          in[l][i][j] = ok;
        }
      }
    }
  }

  /// Level-l cell contained in Omega^{l+1}.
  bool covered_by_next(int l, int i, int j) const {
    return l + 1 < levels && in[l][i][j] && !act[l][i][j];
  }
};

/// From-scratch evaluation of the hierarchical B-spline membership rule.
inline std::set<thbheat::FunctionIndex> hb_functions(const thbheat::HierarchicalSpace &sp) {
  const Subdomains dom(sp);
  const int p = sp.degree();
  std::set<thbheat::FunctionIndex> out;
  for (int l = 0; l < dom.levels; ++l) {
    const auto &s = sp.mesh().space(l);
    for (int a = 0; a < s.size_x(); ++a) {
      for (int b = 0; b < s.size_y(); ++b) {
        bool inside = true;
        bool inside_next = true;
        for (int i = std::max(0, a - p); i <= std::min(s.cells_x() - 1, a); ++i) {
          for (int j = std::max(0, b - p); j <= std::min(s.cells_y() - 1, b); ++j) {
            inside = inside && dom.in[l][i][j];
            inside_next = inside_next && dom.covered_by_next(l, i, j);
          }
        }
        if (inside && !inside_next) out.insert({l, a, b});
      }
    }
  }
  return out;
}

/// Dense coefficients on level `level` (row-major a * size_y + b).
using Dense = std::vector<double>;

inline Dense refine_dense(const thbheat::HierarchicalSpace &sp, const Dense &c, int coarse_level) {
  const auto &cs = sp.mesh().space(coarse_level);
  const auto &fs = sp.mesh().space(coarse_level + 1);
  const auto tx = thbheat::two_scale_matrix(cs.kv_x(), fs.kv_x());
  const auto ty = thbheat::two_scale_matrix(cs.kv_y(), fs.kv_y());
  Dense out(fs.size_x() * fs.size_y(), 0.0);
  for (int a = 0; a < cs.size_x(); ++a) {
    for (int b = 0; b < cs.size_y(); ++b) {
      const double v = c[a * cs.size_y() + b];
      if (v == 0.0) continue;
      for (int fa = 0; fa < fs.size_x(); ++fa) {
        const double wx = tx.at(a, fa);
        if (wx == 0.0) continue;
        for (int fb = 0; fb < fs.size_y(); ++fb) out[fa * fs.size_y() + fb] += v * wx * ty.at(b, fb);
      }
    }
  }
  return out;
}

/// Expansion of one level-l B-spline (untruncated) to the finest level.
inline Dense hb_expand(const thbheat::HierarchicalSpace &sp, const thbheat::FunctionIndex &f) {
  const auto &s = sp.mesh().space(f.level);
  Dense c(s.size_x() * s.size_y(), 0.0);
  c[f.a * s.size_y() + f.b] = 1.0;
  for (int l = f.level; l + 1 < sp.max_levels(); ++l) c = refine_dense(sp, c, l);
  return c;
}

/// Expansion of Trunc(f) to the finest level: expand one level at a time and
/// zero coefficients of functions supported inside that level's subdomain.
inline Dense thb_expand(const thbheat::HierarchicalSpace &sp, const thbheat::FunctionIndex &f) {
  const Subdomains dom(sp);
  const int p = sp.degree();
  const auto &s0 = sp.mesh().space(f.level);
  Dense c(s0.size_x() * s0.size_y(), 0.0);
  c[f.a * s0.size_y() + f.b] = 1.0;
  for (int l = f.level + 1; l < sp.max_levels(); ++l) {
    c = refine_dense(sp, c, l - 1);
    const auto &s = sp.mesh().space(l);
    for (int a = 0; a < s.size_x(); ++a) {
      for (int b = 0; b < s.size_y(); ++b) {
        bool inside = true;
        for (int i = std::max(0, a - p); i <= std::min(s.cells_x() - 1, a); ++i) {
          for (int j = std::max(0, b - p); j <= std::min(s.cells_y() - 1, b); ++j) inside = inside && dom.in[l][i][j];
        }
        if (inside) c[a * s.size_y() + b] = 0.0;
      }
    }
  }
  return c;
}

/// Value of a finest-level dense expansion at (x, y).
inline double eval_dense(const thbheat::HierarchicalSpace &sp, const Dense &c, double x, double y) {
  const auto &s = sp.mesh().space(sp.max_levels() - 1);
  const auto &U = s.kv_x().knots();
  const auto &V = s.kv_y().knots();
  const int p = sp.degree();
  std::vector<double> bx(s.size_x()), by(s.size_y());
  for (int a = 0; a < s.size_x(); ++a) bx[a] = bspline(U, a, p, x);
  for (int b = 0; b < s.size_y(); ++b) by[b] = bspline(V, b, p, y);
  double v = 0.0;
  for (int a = 0; a < s.size_x(); ++a) {
    if (bx[a] == 0.0) continue;
    for (int b = 0; b < s.size_y(); ++b) v += c[a * s.size_y() + b] * bx[a] * by[b];
  }
  return v;
}

/// Brute-force multilevel support extension: level-k cells Q' such that some
/// level-k B-spline is nonzero on both Q' and Q (tested at cell midpoints).
inline std::set<thbheat::CellIndex> support_extension_bruteforce(const thbheat::HierarchicalSpace &sp,
                                                                  const thbheat::CellIndex &q, int k) {
  const auto &mesh = sp.mesh();
  const auto &s = mesh.space(k);
  const int p = sp.degree();
  const auto qb = mesh.bounds(q);
  const double qx = 0.5 * (qb[0] + qb[1]);
  const double qy = 0.5 * (qb[2] + qb[3]);
  const auto &U = s.kv_x().knots();
  const auto &V = s.kv_y().knots();
  std::set<thbheat::CellIndex> out;
  for (int a = 0; a < s.size_x(); ++a) {
    for (int b = 0; b < s.size_y(); ++b) {
      if (bspline(U, a, p, qx) * bspline(V, b, p, qy) == 0.0) continue;
      for (int i = 0; i < s.cells_x(); ++i) {
        for (int j = 0; j < s.cells_y(); ++j) {
          const auto cb = mesh.bounds({k, i, j});
          const double mx = 0.5 * (cb[0] + cb[1]);
          const double my = 0.5 * (cb[2] + cb[3]);
          if (bspline(U, a, p, mx) * bspline(V, b, p, my) != 0.0) out.insert({k, i, j});
        }
      }
    }
  }
  return out;
}

/// Uniformly random parametric point.
inline std::pair<double, double> random_point(std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {u(rng), u(rng)};
}

} // namespace oracle
