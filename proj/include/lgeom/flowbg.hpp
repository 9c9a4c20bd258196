#pragma once

// Closed-form backward Ricci flows (dg/dtau = 2 Ric) and their pointwise
// tensors in stereographic / Cartesian charts.
//
// Curvature convention: R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z
// - nabla_[X,Y] Z, so that <R(X,U)U,X> = K (|X|^2 |U|^2 - <X,U>^2) for a
// space of constant sectional curvature K.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <vector>

#include "lgeom/errors.hpp"

namespace lgeom {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using TangentVec = Eigen::VectorXd;

/// Backward time. Construction rejects negative or non-finite values.
class Tau {
 public:
  explicit Tau(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

struct ChartPoint {
  Vec coords;
  int chart_id = 0;
};

/// Dense n x n x n array, index order (a, b, c).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}
  int dim() const noexcept { return n_; }
  double& operator()(int a, int b, int c) { return data_[idx(a, b, c)]; }
  double operator()(int a, int b, int c) const { return data_[idx(a, b, c)]; }
  double max_abs() const;

 private:
  std::size_t idx(int a, int b, int c) const {
    return static_cast<std::size_t>((a * n_ + b) * n_ + c);
  }
  int n_ = 0;
  std::vector<double> data_;
};

/// Dense n^4 array, index order (a, b, c, d).
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n * n), 0.0) {}
  int dim() const noexcept { return n_; }
  double& operator()(int a, int b, int c, int d) { return data_[idx(a, b, c, d)]; }
  double operator()(int a, int b, int c, int d) const { return data_[idx(a, b, c, d)]; }

 private:
  std::size_t idx(int a, int b, int c, int d) const {
    return static_cast<std::size_t>(((a * n_ + b) * n_ + c) * n_ + d);
  }
  int n_ = 0;
  std::vector<double> data_;
};

/// Everything the L-geometry formulas consume at one (point, tau).
///   christoffel(k, i, j) = Gamma^k_ij
///   riemann(l, i, j, k)  = R^l_ijk with R(d_i, d_j) d_k = R^l_ijk d_l
///   cov_ricci(i, j, k)   = (nabla_i Ric)_jk
///   grad_R is the gradient vector g^{-1} dR; hess_R is the (0,2) Hessian.
struct TensorPack {
  Mat g;
  Mat g_inv;
  Tensor3 christoffel;
  Tensor4 riemann;
  Mat ricci;
  double scalar_R = 0.0;
  Vec grad_R;
  Mat hess_R;
  Tensor3 cov_ricci;

  int dim() const { return static_cast<int>(g.rows()); }

  /// Gamma^k_ij a^i b^j
  Vec christoffel_contract(const Vec& a, const Vec& b) const;
  /// R(a, b) c
  Vec curvature(const Vec& a, const Vec& b, const Vec& c) const;
  /// g^{-1} Ric, the Ricci endomorphism.
  Mat ricci_endo() const { return g_inv * ricci; }
  /// g^{-1} Hess R, so hess_endo() * u = nabla_u (grad R).
  Mat hess_endo() const { return g_inv * hess_R; }
  /// (nabla_u Ric)(w, .) raised with g^{-1}.
  Vec cov_ricci_vec(const Vec& u, const Vec& w) const;
  /// (nabla_u Ric)(a, b)
  double cov_ricci_form(const Vec& u, const Vec& a, const Vec& b) const;
};

enum class BackgroundKind { StaticEuclidean, ShrinkingSphere, ShrinkingCylinder };

/// Cylinder is S^{n-1} x R; sphere is S^n. Coordinates on the round factor
/// are stereographic (two charts, exchanged by inversion y -> y / |y|^2).
class FlowBackground {
 public:
  static FlowBackground euclidean(int n);
  static FlowBackground sphere(int n, double c0);
  static FlowBackground cylinder(int n, double c0);

  BackgroundKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return n_; }
  double c0() const noexcept { return c0_; }

  /// Number of leading stereographic coordinates (0 for Euclidean).
  int round_dim() const noexcept;
  bool has_charts() const noexcept { return round_dim() > 0; }
  /// Scale c(tau) of the round factor, g_round(tau) = c(tau) g_unit.
  double scale(Tau tau) const;

  nlohmann::json to_json() const;
  static FlowBackground from_json(const nlohmann::json& j);

 private:
  FlowBackground(BackgroundKind kind, int n, double c0) : kind_(kind), n_(n), c0_(c0) {}
  BackgroundKind kind_;
  int n_;
  double c0_;
};

/// Charts switch when the stereographic radius passes this value.
inline constexpr double kRecenterThreshold = 2.0;
/// Beyond this radius a chart point is rejected as InvalidChart.
inline constexpr double kMaxChartRadius = 100.0;

void check_chart(const FlowBackground& bg, const ChartPoint& x);

Mat metric_at(const FlowBackground& bg, const ChartPoint& x, Tau tau);
TensorPack tensors_at(const FlowBackground& bg, const ChartPoint& x, Tau tau);
/// Closed-form dg/dtau; identical to 2 Ric.
Mat dg_dtau_at(const FlowBackground& bg, const ChartPoint& x, Tau tau);

struct ChartTransition {
  ChartPoint point;
  Mat jacobian;  // d(new coords) / d(old coords)
};

/// Re-express x in the opposite stereographic chart.
ChartTransition switch_chart(const FlowBackground& bg, const ChartPoint& x);
/// Move x into the chart whose center is nearest: switches when the
/// stereographic radius exceeds 1, identity otherwise.
ChartTransition recenter_chart(const FlowBackground& bg, const ChartPoint& x);
/// Express x in the chart `chart_id` (identity if already there).
ChartTransition to_chart(const FlowBackground& bg, const ChartPoint& x, int chart_id);

/// Riemannian exponential map of the tau-slice metric g(tau).
ChartPoint slice_exp(const FlowBackground& bg, const ChartPoint& x, Tau tau, const TangentVec& v);

/// Orthonormal basis of (T_x M, g(tau)) as matrix columns.
Mat orthonormal_frame(const FlowBackground& bg, const ChartPoint& x, Tau tau);

}  // namespace lgeom
