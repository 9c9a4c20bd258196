#include "lgeom/flow_system.hpp"

#include <algorithm>
#include <cmath>

namespace lgeom {

Vec FlowLayout::pack(const FlowState& st, bool tau_form) const {
  Vec y(size());
  const int n = n_;
  const double scale = tau_form ? 1.0 / (2.0 * st.s) : 1.0;
  y.segment(0, n) = st.x.coords;
  y.segment(n, n) = scale * st.Z;
  y.segment(2 * n, n * n) = Eigen::Map<const Vec>(st.E.data(), n * n);
  if (k_ > 0) {
    const int off = 2 * n + n * n;
    y.segment(off, n * k_) = Eigen::Map<const Vec>(st.U.data(), n * k_);
    y.segment(off + n * k_, n * k_) = scale * Eigen::Map<const Vec>(st.DU.data(), n * k_);
  }
  return y;
}

FlowState FlowLayout::unpack(const Vec& y, double s, int chart, bool tau_form) const {
  const int n = n_;
  const double scale = tau_form ? 2.0 * s : 1.0;
  FlowState st;
  st.s = s;
  st.x.coords = y.segment(0, n);
  st.x.chart_id = chart;
  st.Z = scale * y.segment(n, n);
  st.E = Eigen::Map<const Mat>(y.data() + 2 * n, n, n);
  const int off = 2 * n + n * n;
  st.U = Eigen::Map<const Mat>(y.data() + off, n, k_);
  st.DU = scale * Eigen::Map<const Mat>(y.data() + off + n * k_, n, k_);
  return st;
}

FlowState evaluate_step(const FlowStep& step, const FlowLayout& layout, double s) {
  const double t = step.tau_form ? s * s : s;
  return layout.unpack(step.dense(t), s, step.chart, step.tau_form);
}

FrameCoefficients frame_coefficients(const FlowBackground& bg, const FlowState& st,
                                     bool flip_index_curvature) {
  const int n = bg.dim();
  const double s = st.s;
  const TensorPack tp = tensors_at(bg, st.x, Tau(s * s));
  const Mat& E = st.E;
  FrameCoefficients fc;
  fc.gram = E.transpose() * tp.g * E;

  const Mat hess = tp.hess_R;
  const Mat ric_endo = tp.ricci_endo();
  const auto lu = E.partialPivLu();

  Mat pcols(n, n);
  for (int b = 0; b < n; ++b) {
    const Vec Eb = E.col(b);
    pcols.col(b) = tp.curvature(st.Z, Eb, st.Z) + 2.0 * s * s * (tp.hess_endo() * Eb) -
                   4.0 * s * tp.cov_ricci_vec(Eb, st.Z);
  }
  fc.jacobi_potential = lu.solve(pcols);
  fc.jacobi_damping = -4.0 * s * lu.solve(ric_endo * E);

  const double sign = flip_index_curvature ? -1.0 : 1.0;
  fc.index_potential.resize(n, n);
  for (int a = 0; a < n; ++a) {
    const Vec Ea = E.col(a);
    // R(E_a, Z) E_b paired with Z: <R(E_a,Z)E_b, Z> = <R(Z,E_a)Z, E_b>
    const Vec rza = tp.curvature(st.Z, Ea, st.Z);
    for (int b = 0; b < n; ++b) {
      const Vec Eb = E.col(b);
      double q = sign * rza.dot(tp.g * Eb);
      q += 2.0 * s * s * Ea.dot(hess * Eb);
      q -= 2.0 * s * tp.cov_ricci_form(Ea, Eb, st.Z);
      q -= 2.0 * s * tp.cov_ricci_form(Eb, Ea, st.Z);
      q += 2.0 * s * tp.cov_ricci_form(st.Z, Ea, Eb);
      fc.index_potential(a, b) = q;
    }
  }
  fc.index_potential = 0.5 * (fc.index_potential + fc.index_potential.transpose()).eval();
  return fc;
}

// ---------------------------------------------------------------------------

FlowIntegrator::FlowIntegrator(FlowBackground bg, ChartPoint p, Vec v, double s_max, Mat u0, Mat w0,
                               FlowOptions opts)
    : bg_(bg),
      p_(std::move(p)),
      v_(std::move(v)),
      s_max_(s_max),
      u0_(std::move(u0)),
      w0_(std::move(w0)),
      opts_(opts),
      layout_(bg.dim(), static_cast<int>(u0_.cols())) {
  check_chart(bg_, p_);
  if (v_.size() != bg_.dim()) throw Error(ErrorKind::InvalidArgument, "initial vector has wrong dimension");
  if (!v_.allFinite()) throw Error(ErrorKind::InvalidArgument, "initial vector is not finite");
  if (!(s_max_ > 0.0) || !std::isfinite(s_max_))
    throw Error(ErrorKind::InvalidArgument, "tau_bar must be positive and finite");
  if (!(opts_.tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
  if (u0_.rows() != bg_.dim() || w0_.rows() != bg_.dim() || u0_.cols() != w0_.cols())
    throw Error(ErrorKind::InvalidArgument, "Jacobi initial data has wrong shape");
  E0_ = orthonormal_frame(bg_, p_, Tau(0.0));
}

void FlowIntegrator::rhs(double t, const Vec& y, Vec& dy, int chart, bool tau_form) const {
  const int n = layout_.n();
  const int k = layout_.k();
  const double tau = tau_form ? t : t * t;
  const double s = tau_form ? std::sqrt(t) : t;

  ChartPoint x{y.segment(0, n), chart};
  const TensorPack tp = tensors_at(bg_, x, Tau(tau));
  const Vec V = y.segment(n, n);  // Z in s-form, X in tau-form
  const Eigen::Map<const Mat> E(y.data() + 2 * n, n, n);
  const Mat ric_endo = tp.ricci_endo();

  dy.resize(y.size());
  dy.segment(0, n) = V;
  Vec acc = -tp.christoffel_contract(V, V);
  if (tau_form) {
    acc += 0.5 * tp.grad_R - V / (2.0 * tau) - 2.0 * ric_endo * V;
  } else {
    acc += 2.0 * s * s * tp.grad_R - 4.0 * s * ric_endo * V;
  }
  dy.segment(n, n) = acc;
  Eigen::Map<Mat> dE(dy.data() + 2 * n, n, n);
  for (int a = 0; a < n; ++a) dE.col(a) = -tp.christoffel_contract(V, E.col(a));

  if (k == 0) return;
  const int off = 2 * n + n * n;
  const Eigen::Map<const Mat> U(y.data() + off, n, k);
  const Eigen::Map<const Mat> W(y.data() + off + n * k, n, k);
  const auto lu = E.partialPivLu();
  Mat pcols(n, n);
  const double hess_w = tau_form ? 0.5 : 2.0 * s * s;
  const double ric_w = tau_form ? 2.0 : 4.0 * s;
  const Mat hess_endo = tp.hess_endo();
  for (int b = 0; b < n; ++b) {
    const Vec Eb = E.col(b);
    pcols.col(b) = tp.curvature(V, Eb, V) + hess_w * (hess_endo * Eb) - ric_w * tp.cov_ricci_vec(Eb, V);
  }
  const Mat P = lu.solve(pcols);
  const Mat C = -ric_w * lu.solve(ric_endo * E);
  Eigen::Map<Mat> dU(dy.data() + off, n, k);
  Eigen::Map<Mat> dW(dy.data() + off + n * k, n, k);
  dU = W;
  dW = P * U + C * W;
  if (tau_form) dW -= W / (2.0 * tau);
}

void FlowIntegrator::run_leg(Dopri5& stepper, double t_end, bool tau_form, int& chart,
                             const StepCallback& cb) {
  const int n = layout_.n();
  const int m = bg_.round_dim();
  while (stepper.t() < t_end) {
    const DenseStep& d = stepper.step(t_end);
    FlowStep fs;
    fs.tau_form = tau_form;
    fs.chart = chart;
    fs.s0 = tau_form ? std::sqrt(d.t0) : d.t0;
    fs.s1 = tau_form ? std::sqrt(stepper.t()) : stepper.t();
    fs.dense = d;
    if (cb) cb(fs);

    if (m > 0) {
      const Vec& y = stepper.y();
      if (y.head(m).norm() > kRecenterThreshold) {
        ChartTransition tr = switch_chart(bg_, ChartPoint{y.segment(0, n), chart});
        Vec y2 = y;
        y2.segment(0, n) = tr.point.coords;
        y2.segment(n, n) = tr.jacobian * y.segment(n, n);
        Eigen::Map<Mat> E2(y2.data() + 2 * n, n, n);
        E2 = tr.jacobian * Eigen::Map<const Mat>(y.data() + 2 * n, n, n);
        if (!y2.allFinite() || tr.point.coords.head(m).norm() > kRecenterThreshold)
          throw Error(ErrorKind::ChartEscape, "chart switch did not recenter the path");
        chart = tr.point.chart_id;
        stepper.reset(stepper.t(), y2);
      }
    }
  }
}

void FlowIntegrator::run(const StepCallback& on_step) {
  FlowState init;
  init.s = 0.0;
  init.x = p_;
  init.Z = 2.0 * v_;
  init.E = E0_;
  init.U = u0_;
  init.DU = w0_;

  IntegratorOptions io;
  io.rtol = opts_.tol;
  io.atol = opts_.tol;

  int chart = p_.chart_id;
  double s_switch = s_max_;
  if (opts_.tau_epsilon) {
    if (!(*opts_.tau_epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau_epsilon must be positive");
    s_switch = std::min(s_max_, std::sqrt(*opts_.tau_epsilon));
  }

  io.h_max = opts_.max_step_fraction * s_switch;
  Dopri5 s_stepper([this, &chart](double t, const Vec& y, Vec& dy) { rhs(t, y, dy, chart, false); }, io);
  s_stepper.reset(0.0, layout_.pack(init, false));
  run_leg(s_stepper, s_switch, false, chart, on_step);
  stats_ = s_stepper.stats();
  FlowState st = layout_.unpack(s_stepper.y(), s_switch, chart, false);

  if (s_switch < s_max_) {
    const double tau0 = s_switch * s_switch;
    const double tau1 = s_max_ * s_max_;
    io.h_max = opts_.max_step_fraction * (tau1 - tau0);
    Dopri5 t_stepper([this, &chart](double t, const Vec& y, Vec& dy) { rhs(t, y, dy, chart, true); }, io);
    t_stepper.reset(tau0, layout_.pack(st, true));
    run_leg(t_stepper, tau1, true, chart, on_step);
    const IntegratorStats& ts = t_stepper.stats();
    stats_.accepted += ts.accepted;
    stats_.rejected += ts.rejected;
    stats_.rhs_evals += ts.rhs_evals;
    stats_.max_error_ratio = std::max(stats_.max_error_ratio, ts.max_error_ratio);
    st = layout_.unpack(t_stepper.y(), s_max_, chart, true);
  }
  final_ = st;
}

// ---------------------------------------------------------------------------

Trajectory::Trajectory(FlowBackground bg, FlowLayout layout, std::vector<FlowStep> steps,
                       IntegratorStats stats, double s_max, double tol, Mat initial_frame)
    : bg_(bg),
      layout_(layout),
      steps_(std::move(steps)),
      stats_(stats),
      s_max_(s_max),
      tol_(tol),
      E0_(std::move(initial_frame)) {}

FlowState Trajectory::at(double s) const {
  if (steps_.empty()) throw Error(ErrorKind::InvalidArgument, "empty trajectory");
  const double slack = 1e-12 * std::max(1.0, s_max_);
  if (s < -slack || s > s_max_ + slack)
    throw Error(ErrorKind::InvalidArgument, "parameter outside [0, s_max]");
  s = std::clamp(s, 0.0, s_max_);
  auto it = std::upper_bound(steps_.begin(), steps_.end(), s,
                             [](double v, const FlowStep& st) { return v < st.s1; });
  if (it == steps_.end()) --it;
  return evaluate_step(*it, layout_, s);
}

std::shared_ptr<const Trajectory> integrate_trajectory(const FlowBackground& bg, const ChartPoint& p,
                                                       const Vec& v, double s_max, const Mat& u0,
                                                       const Mat& w0, const FlowOptions& opts) {
  FlowIntegrator fi(bg, p, v, s_max, u0, w0, opts);
  std::vector<FlowStep> steps;
  fi.run([&steps](const FlowStep& st) { steps.push_back(st); });
  return std::make_shared<const Trajectory>(bg, fi.layout(), std::move(steps), fi.stats(), s_max,
                                            opts.tol, fi.initial_frame());
}

}  // namespace lgeom
