#pragma once

// Joint integration of an L-geodesic, a parallel frame along it and a block
// of L-Jacobi fields in frame components.
//
// Regularized form, s = sqrt(tau), Z = d gamma / ds:
//   D_s Z   = 2 s^2 grad R - 4 s Ric(Z)
//   D_s E_a = 0
//   D_s D_s U = R(Z,U)Z + 2 s^2 nabla_U grad R - 4 s (nabla_U Ric)(Z) - 4 s Ric(D_s U)
// Unregularized tau-form (used from tau_epsilon on, for consistency checks):
//   nabla_X X = 1/2 grad R - X/(2 tau) - 2 Ric(X)
//   nabla_X nabla_X U = R(X,U)X + 1/2 nabla_U grad R - 2 (nabla_U Ric)(X)
//                       - 2 Ric(nabla_X U) - nabla_X U / (2 tau)
// Jacobi fields are stored as frame components u (U = E u), so D_s U = E u'.

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "lgeom/flowbg.hpp"
#include "lgeom/integrator.hpp"

namespace lgeom {

struct FlowState {
  double s = 0.0;
  ChartPoint x;
  Vec Z;   // d gamma / ds, coordinate components
  Mat E;   // parallel frame, columns in coordinates
  Mat U;   // n x k frame components of the Jacobi block
  Mat DU;  // n x k frame components of D_s U

  double tau() const { return s * s; }
};

struct FlowOptions {
  double tol = 1e-10;
  /// When set, the s-form is used only up to tau_epsilon and the
  /// unregularized tau-form takes over from there.
  std::optional<double> tau_epsilon;
  /// Upper bound on a step as a fraction of the integration span.
  double max_step_fraction = 0.01;
};

class FlowLayout {
 public:
  FlowLayout(int n, int k) : n_(n), k_(k) {}
  int n() const noexcept { return n_; }
  int k() const noexcept { return k_; }
  int size() const noexcept { return 2 * n_ + n_ * n_ + 2 * n_ * k_; }

  /// Packs a state in s-form variables (tau_form converts Z, DU).
  Vec pack(const FlowState& st, bool tau_form) const;
  FlowState unpack(const Vec& y, double s, int chart, bool tau_form) const;

 private:
  int n_, k_;
};

struct FlowStep {
  double s0 = 0.0;
  double s1 = 0.0;
  int chart = 0;
  bool tau_form = false;
  DenseStep dense;  // independent variable is s, or tau when tau_form
};

FlowState evaluate_step(const FlowStep& step, const FlowLayout& layout, double s);

/// Frame-component coefficients at one point of the flow.
///   gram             G_ab = <E_a, E_b>_{g(tau)}
///   index_potential  Q_ab, the zero-order part of the s-form index form:
///                    <R(E_a,Z)E_b,Z> + 2s^2 Hess R(E_a,E_b)
///                    - 2s (nabla_{E_a}Ric)(E_b,Z) - 2s (nabla_{E_b}Ric)(E_a,Z)
///                    + 2s (nabla_Z Ric)(E_a,E_b)
///   jacobi_potential P with u'' = P u + C u' the Jacobi system
///   jacobi_damping   C = -4 s E^{-1} Ric E
struct FrameCoefficients {
  Mat gram;
  Mat index_potential;
  Mat jacobi_potential;
  Mat jacobi_damping;
};

FrameCoefficients frame_coefficients(const FlowBackground& bg, const FlowState& st,
                                     bool flip_index_curvature = false);

class FlowIntegrator {
 public:
  using StepCallback = std::function<void(const FlowStep&)>;

  /// u0, w0 are n x k frame components of U(0) and D_s U(0); the frame starts
  /// g(0)-orthonormal at p.
  FlowIntegrator(FlowBackground bg, ChartPoint p, Vec v, double s_max, Mat u0, Mat w0,
                 FlowOptions opts);

  void run(const StepCallback& on_step);

  const FlowLayout& layout() const noexcept { return layout_; }
  const FlowState& final_state() const noexcept { return final_; }
  const IntegratorStats& stats() const noexcept { return stats_; }
  const Mat& initial_frame() const noexcept { return E0_; }

 private:
  void run_leg(Dopri5& stepper, double t_end, bool tau_form, int& chart, const StepCallback& cb);
  void rhs(double t, const Vec& y, Vec& dy, int chart, bool tau_form) const;

  FlowBackground bg_;
  ChartPoint p_;
  Vec v_;
  double s_max_;
  Mat u0_, w0_, E0_;
  FlowOptions opts_;
  FlowLayout layout_;
  FlowState final_;
  IntegratorStats stats_;
};

/// Recorded dense output of a FlowIntegrator run. Immutable once built.
class Trajectory {
 public:
  Trajectory(FlowBackground bg, FlowLayout layout, std::vector<FlowStep> steps, IntegratorStats stats,
             double s_max, double tol, Mat initial_frame);

  FlowState at(double s) const;
  const FlowBackground& background() const noexcept { return bg_; }
  const FlowLayout& layout() const noexcept { return layout_; }
  const std::vector<FlowStep>& steps() const noexcept { return steps_; }
  const IntegratorStats& stats() const noexcept { return stats_; }
  const Mat& initial_frame() const noexcept { return E0_; }
  double s_max() const noexcept { return s_max_; }
  double tol() const noexcept { return tol_; }

 private:
  FlowBackground bg_;
  FlowLayout layout_;
  std::vector<FlowStep> steps_;
  IntegratorStats stats_;
  double s_max_;
  double tol_;
  Mat E0_;
};

std::shared_ptr<const Trajectory> integrate_trajectory(const FlowBackground& bg, const ChartPoint& p,
                                                       const Vec& v, double s_max, const Mat& u0,
                                                       const Mat& w0, const FlowOptions& opts);

}  // namespace lgeom
