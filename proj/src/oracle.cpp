#include "lgeom/oracle.hpp"

#include <cmath>
#include <limits>

namespace lgeom {

namespace {

// Below this the central differences lose most of their digits.
constexpr double kMinStep = 1e-7;

}  // namespace

DiscreteCurve::DiscreteCurve(std::vector<double> taus, std::vector<ChartPoint> points)
    : taus_(std::move(taus)), points_(std::move(points)) {
  if (taus_.size() != points_.size()) throw Error(ErrorKind::InvalidArgument, "taus and points differ in length");
  if (taus_.size() < 3) throw Error(ErrorKind::InvalidArgument, "a discrete curve needs at least 3 samples");
  if (!(taus_.front() >= 0.0)) throw Error(ErrorKind::NegativeTau, "first tau is negative");
  for (std::size_t i = 1; i < taus_.size(); ++i)
    if (!(taus_[i] > taus_[i - 1])) throw Error(ErrorKind::NonMonotoneTau, "taus must strictly increase");
}

double discrete_llength(const FlowBackground& bg, const DiscreteCurve& curve) {
  const std::size_t N = curve.size();
  std::vector<double> s(N);
  for (std::size_t i = 0; i < N; ++i) s[i] = std::sqrt(curve.tau(i));

  auto local = [&](std::size_t j, int chart) -> Vec {
    return to_chart(bg, curve.point(j), chart).point.coords;
  };

  std::vector<double> f(N);
  for (std::size_t i = 0; i < N; ++i) {
    const ChartPoint& x = curve.point(i);
    Vec d;
    if (i == 0) {
      const double h1 = s[1] - s[0], h2 = s[2] - s[1];
      d = -(2 * h1 + h2) / (h1 * (h1 + h2)) * x.coords + (h1 + h2) / (h1 * h2) * local(1, x.chart_id) -
          h1 / (h2 * (h1 + h2)) * local(2, x.chart_id);
    } else if (i == N - 1) {
      const double h1 = s[N - 2] - s[N - 3], h2 = s[N - 1] - s[N - 2];
      d = h2 / (h1 * (h1 + h2)) * local(N - 3, x.chart_id) - (h1 + h2) / (h1 * h2) * local(N - 2, x.chart_id) +
          (2 * h2 + h1) / (h2 * (h1 + h2)) * x.coords;
    } else {
      const double h1 = s[i] - s[i - 1], h2 = s[i + 1] - s[i];
      d = -h2 / (h1 * (h1 + h2)) * local(i - 1, x.chart_id) + (h2 - h1) / (h1 * h2) * x.coords +
          h1 / (h2 * (h1 + h2)) * local(i + 1, x.chart_id);
    }
    const TensorPack tp = tensors_at(bg, x, Tau(curve.tau(i)));
    f[i] = 2.0 * s[i] * s[i] * tp.scalar_R + 0.5 * d.dot(tp.g * d);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) sum += 0.5 * (s[i + 1] - s[i]) * (f[i] + f[i + 1]);
  return sum;
}

DiscreteCurve sample_path(const LGeodesicPath& path, int samples) {
  if (samples < 3) throw Error(ErrorKind::InvalidArgument, "need at least 3 samples");
  std::vector<double> taus;
  std::vector<ChartPoint> pts;
  for (int i = 0; i < samples; ++i) {
    const double s = path.s_max() * i / (samples - 1);
    taus.push_back(s * s);
    pts.push_back(path.point(s));
  }
  return DiscreteCurve(std::move(taus), std::move(pts));
}

DiscreteCurve displaced_curve(const LGeodesicPath& path, const FieldAlong& Y, double eps,
                              const VariationOptions& opts) {
  if (opts.samples < 3) throw Error(ErrorKind::InvalidArgument, "need at least 3 samples");
  const FlowBackground& bg = path.background();
  std::vector<double> taus;
  std::vector<ChartPoint> pts;
  for (int i = 0; i < opts.samples; ++i) {
    const double s = path.s_max() * i / (opts.samples - 1);
    const FlowState st = path.at(s);
    const Vec w = eps * (st.E * Y.u(s));
    ChartPoint q;
    if (opts.mode == Displacement::SliceExp) {
      q = slice_exp(bg, st.x, Tau(s * s), w);
    } else {
      q = ChartPoint{st.x.coords + w, st.x.chart_id};
      check_chart(bg, q);
    }
    taus.push_back(s * s);
    pts.push_back(std::move(q));
  }
  return DiscreteCurve(std::move(taus), std::move(pts));
}

double fd_second_variation(const FlowBackground& bg, const LGeodesicPath& path, const FieldAlong& Y,
                           std::array<double, 2> eps, const VariationOptions& opts) {
  if (!(eps[0] > eps[1]) || eps[1] < kMinStep)
    throw Error(ErrorKind::StepTooSmall, "need eps[0] > eps[1] >= 1e-7");
  double ymax = 0.0;
  for (int i = 0; i < opts.samples; ++i) ymax = std::max(ymax, Y.u(path.s_max() * i / (opts.samples - 1)).norm());
  if (ymax == 0.0) return 0.0;

  const double L0 = discrete_llength(bg, displaced_curve(path, Y, 0.0, opts));
  double D[2];
  double noise = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double lp = discrete_llength(bg, displaced_curve(path, Y, eps[k], opts));
    const double lm = discrete_llength(bg, displaced_curve(path, Y, -eps[k], opts));
    D[k] = (lp - 2.0 * L0 + lm) / (eps[k] * eps[k]);
    noise = 4.0 * std::numeric_limits<double>::epsilon() * (std::abs(lp) + 2.0 * std::abs(L0) + std::abs(lm)) /
            (eps[k] * eps[k]);
  }
  const double e1 = eps[0] * eps[0], e2 = eps[1] * eps[1];
  const double d = (e1 * D[1] - e2 * D[0]) / (e1 - e2);
  if (noise > 0.5 * std::abs(d))
    throw Error(ErrorKind::StepTooSmall, "rounding in the second difference exceeds half the estimate");
  return d;
}

double fd_first_variation(const FlowBackground& bg, const LGeodesicPath& path, const FieldAlong& V, double eps,
                          const VariationOptions& opts) {
  if (!(eps >= kMinStep)) throw Error(ErrorKind::StepTooSmall, "eps below 1e-7");
  const double lp = discrete_llength(bg, displaced_curve(path, V, eps, opts));
  const double lm = discrete_llength(bg, displaced_curve(path, V, -eps, opts));
  return (lp - lm) / (2.0 * eps);
}

}  // namespace lgeom
