#include "lgeom/lgeo.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <iomanip>
#include <ostream>

namespace lgeom {

LGeodesicPath::LGeodesicPath(FlowBackground bg, ChartPoint p, Vec v, double tau_bar, ShootOptions opts,
                             std::shared_ptr<const Trajectory> traj)
    : bg_(bg),
      p_(std::move(p)),
      v_(std::move(v)),
      tau_bar_(tau_bar),
      s_max_(std::sqrt(tau_bar)),
      opts_(opts),
      traj_(std::move(traj)) {}

Vec LGeodesicPath::velocity_tau(double s) const {
  if (!(s > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau-velocity is singular at tau = 0");
  return at(s).Z / (2.0 * s);
}

Mat ParallelFrame::gram(double s) const {
  const FlowState st = path_.at(s);
  const Mat g = metric_at(path_.background(), st.x, Tau(s * s));
  return st.E.transpose() * g * st.E;
}

Mat ParallelFrame::gram_rate(double s) const {
  const FlowState st = path_.at(s);
  const TensorPack tp = tensors_at(path_.background(), st.x, Tau(s * s));
  return 4.0 * s * st.E.transpose() * tp.ricci * st.E;
}

LGeodesicPath shoot(const FlowBackground& bg, const ChartPoint& p, const TangentVec& v, Tau tau_bar,
                    const ShootOptions& opts) {
  if (!(tau_bar.value() > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau_bar must be > 0");
  const double s_max = std::sqrt(tau_bar.value());
  FlowOptions fo;
  fo.tol = opts.tol;
  fo.tau_epsilon = opts.tau_epsilon;
  const int n = bg.dim();
  auto traj = integrate_trajectory(bg, p, v, s_max, Mat(n, 0), Mat(n, 0), fo);
  return LGeodesicPath(bg, p, v, tau_bar.value(), opts, std::move(traj));
}

LGeodesicPath shoot(const FlowBackground& bg, const ChartPoint& p, const TangentVec& v, Tau tau_bar,
                    double tol) {
  ShootOptions opts;
  opts.tol = tol;
  return shoot(bg, p, v, tau_bar, opts);
}

ChartPoint lexp(const FlowBackground& bg, const ChartPoint& p, const TangentVec& v, Tau tau_bar,
                double tol) {
  return shoot(bg, p, v, tau_bar, tol).endpoint();
}

double llength_density(const FlowBackground& bg, const FlowState& st) {
  const TensorPack tp = tensors_at(bg, st.x, Tau(st.s * st.s));
  return 2.0 * st.s * st.s * tp.scalar_R + 0.5 * st.Z.dot(tp.g * st.Z);
}

LValue llength(const LGeodesicPath& path) {
  using boost::math::quadrature::gauss_kronrod;
  const Trajectory& tr = path.trajectory();
  LValue out;
  for (const FlowStep& step : tr.steps()) {
    if (step.s1 <= step.s0) continue;
    auto f = [&](double s) {
      return llength_density(path.background(), evaluate_step(step, tr.layout(), s));
    };
    double err = 0.0;
    out.value += gauss_kronrod<double, 15>::integrate(f, step.s0, step.s1, 0, 0.0, &err);
    out.quadrature_error_estimate += err;
  }
  return out;
}

void write_path_csv(std::ostream& os, const LGeodesicPath& path, int samples) {
  if (samples < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 samples");
  const int n = path.dim();
  os << "s,tau,chart";
  for (int i = 0; i < n; ++i) os << ",x" << i;
  for (int i = 0; i < n; ++i) os << ",Z" << i;
  os << '\n';
  os << std::setprecision(17);
  for (int k = 0; k < samples; ++k) {
    const double s = path.s_max() * k / (samples - 1);
    const FlowState st = path.at(s);
    os << s << ',' << s * s << ',' << st.x.chart_id;
    for (int i = 0; i < n; ++i) os << ',' << st.x.coords[i];
    for (int i = 0; i < n; ++i) os << ',' << st.Z[i];
    os << '\n';
  }
}

}  // namespace lgeom
