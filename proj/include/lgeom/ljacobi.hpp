#pragma once

// L-Jacobi fields, the Jacobi matrix J(s) (columns: U(0) = 0,
// D_s U(0) = E_a(0)), conjugate point detection and the differential of
// the L-exponential map.

#include <memory>
#include <nlohmann/json.hpp>
#include <vector>

#include "lgeom/lgeo.hpp"

namespace lgeom {

/// A Jacobi field along a path, stored as a fixed combination of the
/// columns of an integrated Jacobi block: u(s) = U_block(s) * coeffs.
class JacobiSolution {
 public:
  JacobiSolution(LGeodesicPath path, std::shared_ptr<const Trajectory> traj, Vec coeffs);

  const LGeodesicPath& path() const noexcept { return path_; }
  double s_max() const noexcept { return path_.s_max(); }

  /// Frame components of U and of D_s U.
  Vec frame_components(double s) const;
  Vec frame_derivative(double s) const;
  /// Coordinate components (chart of the internally integrated path at s).
  TangentVec U(double s) const;
  TangentVec DU(double s) const;
  FlowState state(double s) const { return traj_->at(s); }
  const Trajectory& trajectory() const noexcept { return *traj_; }
  const Vec& coefficients() const noexcept { return coeffs_; }

 private:
  LGeodesicPath path_;
  std::shared_ptr<const Trajectory> traj_;
  Vec coeffs_;
};

/// u0, w0: coordinate components at the base point of U(0), D_s U(0).
JacobiSolution jacobi_integrate(const LGeodesicPath& path, const TangentVec& u0, const TangentVec& w0,
                                double tol = 1e-10);
/// Same with initial data in frame components (frame is g(0)-orthonormal at p).
JacobiSolution jacobi_integrate_frame(const LGeodesicPath& path, const Vec& u0, const Vec& w0,
                                      double tol = 1e-10);

class JacobiMatrix {
 public:
  JacobiMatrix(LGeodesicPath path, std::shared_ptr<const Trajectory> traj);

  const LGeodesicPath& path() const noexcept { return path_; }
  /// J(s) in frame components.
  Mat at(double s) const { return traj_->at(s).U; }
  Mat derivative(double s) const { return traj_->at(s).DU; }
  /// L^T J(s) with L L^T = G(s): singular values measured in g(tau).
  Mat normalized(double s) const;
  FlowState state(double s) const { return traj_->at(s); }
  /// Jacobi field J(s) c.
  JacobiSolution combination(const Vec& c) const { return JacobiSolution(path_, traj_, c); }

 private:
  LGeodesicPath path_;
  std::shared_ptr<const Trajectory> traj_;
};

JacobiMatrix jacobi_matrix(const LGeodesicPath& path, double tol = 1e-10);

/// G^{1/2}-normalized Jacobi block of a flow state.
Mat normalized_jacobi(const FlowBackground& bg, const FlowState& st);

struct ConjugatePoint {
  double tau = 0.0;
  double s = 0.0;
  int multiplicity = 0;
  bool sign_change = false;            // det J changes sign across the root
  std::vector<double> sigma_ratios;    // sigma_i / sigma_max at the root, ascending
  Mat kernel;                          // frame components spanning ker J(s)
};

struct ConjugateReport {
  std::vector<ConjugatePoint> points;
  int total_multiplicity = 0;
  bool endpoint_conjugate = false;
  double endpoint_sigma_ratio = 1.0;
  long samples = 0;
};

struct ScanOptions {
  double tol = 1e-10;
  double sep = 1e-4;    // minimum resolvable separation in s
  double delta = 1e-6;  // relative singular value threshold
  double root_tol = 1e-10;
};

ConjugateReport conjugate_scan(const LGeodesicPath& path, const ScanOptions& opts);
ConjugateReport conjugate_scan(const LGeodesicPath& path, double tol = 1e-10, double sep = 1e-4);

nlohmann::json to_json(const ConjugateReport& report);

/// d(lexp)/dv in coordinate components (endpoint chart x base chart).
Mat dlexp(const FlowBackground& bg, const ChartPoint& p, const TangentVec& v, Tau tau_bar,
          double tol = 1e-10);

/// Jacobi field with U(0) = 0 and U(tau_bar) = w (coordinates at the
/// endpoint, in the chart of path.endpoint()).
JacobiSolution jacobi_bvp(const LGeodesicPath& path, const TangentVec& w, double tol = 1e-10);

/// Sub-interval form: U(0) = 0, frame components of U(s_end) equal w_frame.
JacobiSolution jacobi_bvp_frame(const JacobiMatrix& jm, double s_end, const Vec& w_frame,
                                double delta = 1e-6);

/// Max over s of |(gamma_{v + eps dv}(s) - gamma_v(s)) / eps - U(s)|_{g(tau)},
/// U the Jacobi field with U(0) = 0, D_s U(0) = 2 dv.
double variation_field_check(const FlowBackground& bg, const ChartPoint& p, const TangentVec& v,
                             const TangentVec& dv, Tau tau_bar, double eps, double tol = 1e-12);

}  // namespace lgeom
