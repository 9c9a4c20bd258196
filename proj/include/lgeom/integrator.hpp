#pragma once

// Dormand-Prince 5(4) with the Hairer-Wanner continuous extension.

#include <functional>
#include <limits>

#include "lgeom/flowbg.hpp"

namespace lgeom {

struct IntegratorOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 20'000'000;
};

struct IntegratorStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
  double max_error_ratio = 0.0;  // largest accepted scaled local error (<= 1)
};

/// Continuous extension of one accepted step on [t0, t0 + h].
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  Vec r1, r2, r3, r4, r5;

  double t1() const { return t0 + h; }
  Vec operator()(double t) const;
};

class Dopri5 {
 public:
  using Rhs = std::function<void(double t, const Vec& y, Vec& dydt)>;

  Dopri5(Rhs rhs, IntegratorOptions opts);

  /// Restart from (t, y); required after any external modification of the
  /// state (the FSAL derivative is recomputed).
  void reset(double t, const Vec& y);

  /// Takes one accepted step toward t_end without overshooting it.
  /// Throws ToleranceNotMet when the step size collapses.
  const DenseStep& step(double t_end);

  double t() const noexcept { return t_; }
  const Vec& y() const noexcept { return y_; }
  const IntegratorStats& stats() const noexcept { return stats_; }

 private:
  double initial_step(double t_end);
  double error_norm(const Vec& err, const Vec& y0, const Vec& y1) const;

  Rhs rhs_;
  IntegratorOptions opts_;
  IntegratorStats stats_;
  double t_ = 0.0;
  double h_ = 0.0;
  Vec y_, k1_;
  DenseStep dense_;
};

}  // namespace lgeom
