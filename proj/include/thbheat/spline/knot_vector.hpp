#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "thbheat/errors.hpp"

namespace thbheat {

/// Open knot vector on [0,1] with simple interior knots.
///
/// The end knots are repeated exactly degree+1 times; every interior knot has
/// multiplicity one, so nonempty knot spans and cells are in one-to-one
/// correspondence: cell i is the span [knots[i+p], knots[i+p+1]).
class KnotVector {
public:
  KnotVector() = default;

  KnotVector(int degree, std::vector<double> knots)
      : degree_(degree), knots_(std::move(knots)) {
    validate();
  }

  /// Uniform open knot vector with `cells` equal spans.
  static KnotVector uniform(int degree, int cells) {
    if (cells < 1) {
      throw StructuralError("uniform knot vector needs at least one cell");
    }
    std::vector<double> k;
    k.reserve(static_cast<std::size_t>(cells + 2 * degree + 1));
    for (int r = 0; r < degree; ++r) k.push_back(0.0);
    for (int c = 0; c <= cells; ++c) {
      k.push_back(static_cast<double>(c) / static_cast<double>(cells));
    }
    for (int r = 0; r < degree; ++r) k.push_back(1.0);
    return KnotVector(degree, std::move(k));
  }

  int degree() const { return degree_; }
  const std::vector<double> &knots() const { return knots_; }
  double knot(int k) const { return knots_[static_cast<std::size_t>(k)]; }

  /// Number of B-spline functions, len(knots) - p - 1.
  int size() const { return static_cast<int>(knots_.size()) - degree_ - 1; }

  /// Number of nonempty knot spans.
  int cells() const { return size() - degree_; }

  double cell_lower(int cell) const { return knot(cell + degree_); }
  double cell_upper(int cell) const { return knot(cell + degree_ + 1); }

  bool operator==(const KnotVector &) const = default;

private:
  void validate() const {
    const int p = degree_;
    if (p < 1) throw StructuralError("knot vector degree must be >= 1");
    const int m = static_cast<int>(knots_.size());
    if (m < 2 * (p + 1)) {
      throw StructuralError("knot vector too short for degree " + std::to_string(p));
    }
    if (!std::is_sorted(knots_.begin(), knots_.end())) {
      throw StructuralError("knots must be nondecreasing");
    }
    if (knots_.front() != 0.0 || knots_.back() != 1.0) {
      throw StructuralError("knot vector must span [0,1]");
    }
    for (int r = 0; r <= p; ++r) {
      if (knot(r) != 0.0 || knot(m - 1 - r) != 1.0) {
        throw StructuralError("end knots must be repeated degree+1 times");
      }
    }
    if (knot(p + 1) == 0.0 || knot(m - p - 2) == 1.0) {
      throw StructuralError("end knots repeated more than degree+1 times");
    }
    for (int k = p + 1; k < m - p - 1; ++k) {
      if (!(knot(k) < knot(k + 1))) {
        throw StructuralError("interior knots must be simple");
      }
    }
  }

  int degree_ = 1;
  std::vector<double> knots_;
};

/// Knot span index k with knots[k] <= x < knots[k+1]. At the right end of
/// the parameter range the last nonempty span is returned.
inline int find_span(const KnotVector &kv, double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("parameter " + std::to_string(x) + " outside [0,1]");
  }
  const int p = kv.degree();
  const int n = kv.size();
  if (x >= kv.knot(n)) return n - 1;
  int lo = p;
  int hi = n;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (x < kv.knot(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

/// Nonzero univariate basis functions at a point. `first` is the index of the
/// first nonzero function (span - p); `values[r]` holds (N, N', N'') of
/// function first+r.
struct BasisEval {
  int first = 0;
  std::vector<std::array<double, 3>> values;
};

/// Cox-de Boor evaluation of the p+1 nonzero functions and their derivatives
/// up to `deriv_order` (at most 2). Derivatives above the degree are zero.
inline BasisEval eval_basis(const KnotVector &kv, double x, int deriv_order = 2) {
  const int span = find_span(kv, x);
  const int p = kv.degree();
  const int nd = std::clamp(deriv_order, 0, 2);
  const int n = std::min(nd, p);

  std::vector<std::vector<double>> ndu(static_cast<std::size_t>(p + 1),
                                       std::vector<double>(static_cast<std::size_t>(p + 1), 0.0));
  std::vector<double> left(static_cast<std::size_t>(p + 1)), right(static_cast<std::size_t>(p + 1));
  auto at = [](auto &v, int r, int c) -> double & {
    return v[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  };
  at(ndu, 0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[static_cast<std::size_t>(j)] = x - kv.knot(span + 1 - j);
    right[static_cast<std::size_t>(j)] = kv.knot(span + j) - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      at(ndu, j, r) = right[static_cast<std::size_t>(r + 1)] + left[static_cast<std::size_t>(j - r)];
      const double temp = at(ndu, r, j - 1) / at(ndu, j, r);
      at(ndu, r, j) = saved + right[static_cast<std::size_t>(r + 1)] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    at(ndu, j, j) = saved;
  }

  BasisEval out;
  out.first = span - p;
  out.values.assign(static_cast<std::size_t>(p + 1), {0.0, 0.0, 0.0});
  for (int j = 0; j <= p; ++j) out.values[static_cast<std::size_t>(j)][0] = at(ndu, j, p);

  std::array<std::vector<double>, 2> a{std::vector<double>(static_cast<std::size_t>(p + 1)),
                                       std::vector<double>(static_cast<std::size_t>(p + 1))};
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= n; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      auto &as1 = a[static_cast<std::size_t>(s1)];
      auto &as2 = a[static_cast<std::size_t>(s2)];
      if (r >= k) {
        as2[0] = as1[0] / at(ndu, pk + 1, rk);
        d = as2[0] * at(ndu, rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        as2[static_cast<std::size_t>(j)] =
            (as1[static_cast<std::size_t>(j)] - as1[static_cast<std::size_t>(j - 1)]) /
            at(ndu, pk + 1, rk + j);
        d += as2[static_cast<std::size_t>(j)] * at(ndu, rk + j, pk);
      }
      if (r <= pk) {
        as2[static_cast<std::size_t>(k)] = -as1[static_cast<std::size_t>(k - 1)] / at(ndu, pk + 1, r);
        d += as2[static_cast<std::size_t>(k)] * at(ndu, r, pk);
      }
      out.values[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= n; ++k) {
    for (int j = 0; j <= p; ++j) out.values[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] *= factor;
    factor *= (p - k);
  }
  return out;
}

/// Bisects every nonempty span.
inline KnotVector dyadic_refine(const KnotVector &kv) {
  const auto &k = kv.knots();
  std::vector<double> out;
  out.reserve(2 * k.size());
  for (std::size_t r = 0; r + 1 < k.size(); ++r) {
    out.push_back(k[r]);
    if (k[r] < k[r + 1]) out.push_back(0.5 * (k[r] + k[r + 1]));
  }
  out.push_back(k.back());
  return KnotVector(kv.degree(), std::move(out));
}

/// One row of a two-scale relation: the coarse function equals
/// sum_r coeffs[r] * fine_{first + r}.
struct TwoScaleRow {
  int first = 0;
  std::vector<double> coeffs;
};

/// Coarse-to-fine refinement coefficients, one row per coarse function.
struct TwoScaleMatrix {
  std::vector<TwoScaleRow> rows;
  int fine_size = 0;

  double at(int coarse, int fine) const {
    const auto &row = rows[static_cast<std::size_t>(coarse)];
    const int r = fine - row.first;
    if (r < 0 || r >= static_cast<int>(row.coeffs.size())) return 0.0;
    return row.coeffs[static_cast<std::size_t>(r)];
  }
};

/// Two-scale coefficients between nested knot vectors. Each coarse function
/// is refined on its own local knot window by inserting the fine knots that
/// fall inside it one at a time (Boehm's rule).
inline TwoScaleMatrix two_scale_matrix(const KnotVector &coarse, const KnotVector &fine) {
  if (coarse.degree() != fine.degree()) {
    throw StructuralError("two-scale relation needs equal degrees");
  }
  const int p = coarse.degree();
  const auto &ck = coarse.knots();
  const auto &fk = fine.knots();
  {
    std::size_t c = 0;
    for (double f : fk) {
      if (c < ck.size() && ck[c] == f) ++c;
    }
    if (c != ck.size()) throw StructuralError("knot vectors are not nested");
  }

  const int nc = coarse.size();
  TwoScaleMatrix out;
  out.fine_size = fine.size();
  out.rows.resize(static_cast<std::size_t>(nc));
  for (int j = 0; j < nc; ++j) {
    const double lo = ck[static_cast<std::size_t>(j)];
    const double hi = ck[static_cast<std::size_t>(j + p + 1)];
    std::vector<double> local(ck.begin() + j, ck.begin() + j + p + 2);
    std::vector<double> coef{1.0};
    // Fine knots strictly inside the window that the coarse window lacks.
    const auto f_lo = std::upper_bound(fk.begin(), fk.end(), lo);
    const auto f_hi = std::lower_bound(fk.begin(), fk.end(), hi);
    for (auto it = f_lo; it != f_hi; ++it) {
      const double xbar = *it;
      if (std::binary_search(local.begin(), local.end(), xbar)) continue;
      const int ncur = static_cast<int>(coef.size());
      const int span = static_cast<int>(std::upper_bound(local.begin(), local.end(), xbar) - local.begin()) - 1;
      std::vector<double> next(static_cast<std::size_t>(ncur + 1), 0.0);
      for (int i = 0; i <= ncur; ++i) {
        double a = 0.0;
        if (i <= span - p) {
          a = 1.0;
        } else if (i <= span) {
          const double ui = local[static_cast<std::size_t>(i)];
          a = (xbar - ui) / (local[static_cast<std::size_t>(i + p)] - ui);
        }
        const double cur = i < ncur ? coef[static_cast<std::size_t>(i)] : 0.0;
        const double prev = i > 0 ? coef[static_cast<std::size_t>(i - 1)] : 0.0;
        next[static_cast<std::size_t>(i)] = a * cur + (1.0 - a) * prev;
      }
      coef = std::move(next);
      local.insert(std::upper_bound(local.begin(), local.end(), xbar), xbar);
    }
    // Fine index of the function starting at coarse knot j.
    const int below_fine = static_cast<int>(std::lower_bound(fk.begin(), fk.end(), lo) - fk.begin());
    const int below_coarse = static_cast<int>(std::lower_bound(ck.begin(), ck.end(), lo) - ck.begin());
    int first = below_fine + (j - below_coarse);
    int a = 0;
    int b = static_cast<int>(coef.size()) - 1;
    while (a <= b && coef[static_cast<std::size_t>(a)] == 0.0) ++a;
    while (b >= a && coef[static_cast<std::size_t>(b)] == 0.0) --b;
    auto &row = out.rows[static_cast<std::size_t>(j)];
    row.first = first + a;
    row.coeffs.assign(coef.begin() + a, coef.begin() + b + 1);
  }
  return out;
}

} // namespace thbheat
