#pragma once

// Vector fields along an L-geodesic in parallel-frame components.
// A field carries u(s), u'(s) and u''(s) (frame components of U, D_s U,
// D_s D_s U); the second derivative is only consumed by the Jacobi operator.

#include <functional>
#include <random>
#include <vector>

#include "lgeom/ljacobi.hpp"

namespace lgeom {

/// Which one-sided limit to take at a breakpoint.
enum class Side { Left, Right };

struct FieldValue {
  Vec u;
  Vec du;
  Vec ddu;
};

class FieldAlong {
 public:
  using Callback = std::function<FieldValue(double s, Side side)>;

  FieldAlong(int n, Callback f, std::vector<double> breakpoints = {}, bool smooth_jacobi = false);

  /// Analytic field; breakpoints mark where smoothness may fail.
  static FieldAlong analytic(int n, Callback f, std::vector<double> breakpoints = {});
  /// Piecewise-linear interpolation of node values (nodes strictly increasing).
  static FieldAlong mesh(std::vector<double> nodes, std::vector<Vec> values);
  /// A Jacobi field; u'' is taken from the Jacobi system itself.
  static FieldAlong from_jacobi(const JacobiSolution& js);
  static FieldAlong zero(int n);
  /// Constant coefficient vector times a scalar profile phi(s).
  static FieldAlong profile(const Vec& direction, std::function<double(double)> phi,
                            std::function<double(double)> dphi, std::function<double(double)> ddphi);

  FieldValue eval(double s, Side side = Side::Right) const { return f_(s, side); }
  Vec u(double s, Side side = Side::Right) const { return f_(s, side).u; }
  Vec du(double s, Side side = Side::Right) const { return f_(s, side).du; }

  int dim() const noexcept { return n_; }
  const std::vector<double>& breakpoints() const noexcept { return breaks_; }
  /// True for fields built from a Jacobi solution (Jacobi operator vanishes by construction).
  bool is_jacobi() const noexcept { return jacobi_; }

  /// a U + b V
  static FieldAlong combine(double a, const FieldAlong& U, double b, const FieldAlong& V);

 private:
  int n_;
  Callback f_;
  std::vector<double> breaks_;
  bool jacobi_;
};

/// Frame components of U converted to coordinates at s along the path.
TangentVec field_coords(const LGeodesicPath& path, const FieldAlong& U, double s);

/// sum_k a_k sin(k pi s / s_end) on [0, s_end], zero beyond; a_k ~ N(0, amplitude^2).
FieldAlong random_sine_field(int n, std::mt19937_64& rng, int modes, double s_end, double amplitude = 1.0);
/// sum_d c_d s^d with c_d ~ N(0, 1); c_0 = 0 when vanish_at_zero.
FieldAlong random_polynomial_field(int n, std::mt19937_64& rng, int degree, bool vanish_at_zero);

}  // namespace lgeom
