#pragma once

// L-geodesics shot from tau = 0, the L-exponential map and L-length.

#include <iosfwd>
#include <memory>
#include <optional>

#include "lgeom/flow_system.hpp"

namespace lgeom {

struct ShootOptions {
  double tol = 1e-10;
  std::optional<double> tau_epsilon;
};

/// A solved L-geodesic with its parallel frame, densely evaluable in s.
/// Immutable and cheap to copy (shares the recorded trajectory).
class LGeodesicPath {
 public:
  LGeodesicPath(FlowBackground bg, ChartPoint p, Vec v, double tau_bar, ShootOptions opts,
                std::shared_ptr<const Trajectory> traj);

  const FlowBackground& background() const noexcept { return bg_; }
  const ChartPoint& base_point() const noexcept { return p_; }
  const Vec& initial_vector() const noexcept { return v_; }
  double tau_bar() const noexcept { return tau_bar_; }
  double s_max() const noexcept { return s_max_; }
  const ShootOptions& options() const noexcept { return opts_; }
  int dim() const noexcept { return bg_.dim(); }

  /// Point, Z = d gamma/ds and frame at s in [0, s_max].
  FlowState at(double s) const { return traj_->at(s); }
  ChartPoint point(double s) const { return at(s).x; }
  /// X = d gamma / d tau = Z / (2 s), for s > 0.
  Vec velocity_tau(double s) const;
  ChartPoint endpoint() const { return at(s_max_).x; }

  const Trajectory& trajectory() const noexcept { return *traj_; }
  const IntegratorStats& stats() const noexcept { return traj_->stats(); }

 private:
  FlowBackground bg_;
  ChartPoint p_;
  Vec v_;
  double tau_bar_;
  double s_max_;
  ShootOptions opts_;
  std::shared_ptr<const Trajectory> traj_;
};

/// Parallel frame along a path together with its Gram matrix.
class ParallelFrame {
 public:
  explicit ParallelFrame(LGeodesicPath path) : path_(std::move(path)) {}
  Mat vectors(double s) const { return path_.at(s).E; }
  Mat gram(double s) const;
  /// Analytic dG/ds = 4 s Ric(E_a, E_b).
  Mat gram_rate(double s) const;

 private:
  LGeodesicPath path_;
};

struct LValue {
  double value = 0.0;
  double quadrature_error_estimate = 0.0;
};

LGeodesicPath shoot(const FlowBackground& bg, const ChartPoint& p, const TangentVec& v, Tau tau_bar,
                    double tol = 1e-10);
LGeodesicPath shoot(const FlowBackground& bg, const ChartPoint& p, const TangentVec& v, Tau tau_bar,
                    const ShootOptions& opts);

ChartPoint lexp(const FlowBackground& bg, const ChartPoint& p, const TangentVec& v, Tau tau_bar,
                double tol = 1e-10);

/// L = int_0^{s_max} (2 s^2 R + |Z|^2 / 2) ds, composite Gauss-Kronrod over
/// the integrator steps.
LValue llength(const LGeodesicPath& path);

/// Integrand of llength at s.
double llength_density(const FlowBackground& bg, const FlowState& st);

/// CSV with header s,tau,chart,x0..,Z0..; `samples` uniform points in s.
void write_path_csv(std::ostream& os, const LGeodesicPath& path, int samples);

}  // namespace lgeom
