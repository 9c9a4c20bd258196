#pragma once

// Brute-force evaluators: discrete L-length of sampled curves and
// finite-difference first/second variations of it. These share no code
// with the ODE right-hand sides or the index form integrand.

#include <array>
#include <vector>

#include "lgeom/fields.hpp"

namespace lgeom {

class DiscreteCurve {
 public:
  /// Throws NonMonotoneTau unless taus strictly increase (first may be 0).
  DiscreteCurve(std::vector<double> taus, std::vector<ChartPoint> points);

  std::size_t size() const noexcept { return taus_.size(); }
  double tau(std::size_t i) const { return taus_[i]; }
  const ChartPoint& point(std::size_t i) const { return points_[i]; }

 private:
  std::vector<double> taus_;
  std::vector<ChartPoint> points_;
};

/// Trapezoid rule in s = sqrt(tau) on 2 s^2 R + |d gamma/ds|^2 / 2 with
/// second-order (non-uniform) difference velocities.
double discrete_llength(const FlowBackground& bg, const DiscreteCurve& curve);

/// `samples` points of the path, uniform in s.
DiscreteCurve sample_path(const LGeodesicPath& path, int samples);

enum class Displacement {
  SliceExp,          // exp of the tau-slice metric: nabla_Y Y = 0
  CoordinateLinear,  // x + eps Y in the chart: nabla_Y Y = Gamma(Y, Y)
};

struct VariationOptions {
  int samples = 2001;
  Displacement mode = Displacement::SliceExp;
};

/// gamma_eps(s) = displacement of gamma(s) by eps Y(s).
DiscreteCurve displaced_curve(const LGeodesicPath& path, const FieldAlong& Y, double eps,
                              const VariationOptions& opts = {});

/// (L(+eps) - 2 L(0) + L(-eps)) / eps^2, Richardson-combined over eps[0] > eps[1].
double fd_second_variation(const FlowBackground& bg, const LGeodesicPath& path, const FieldAlong& Y,
                           std::array<double, 2> eps = {1e-2, 1e-3}, const VariationOptions& opts = {});

/// (L(+eps) - L(-eps)) / (2 eps).
double fd_first_variation(const FlowBackground& bg, const LGeodesicPath& path, const FieldAlong& V,
                          double eps = 1e-3, const VariationOptions& opts = {});

}  // namespace lgeom
