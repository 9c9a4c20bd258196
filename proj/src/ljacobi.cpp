#include "lgeom/ljacobi.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>

namespace lgeom {

namespace {

FlowOptions flow_options(const LGeodesicPath& path, double tol) {
  FlowOptions fo;
  fo.tol = tol;
  fo.tau_epsilon = path.options().tau_epsilon;
  return fo;
}

struct Sample {
  double s = 0.0;
  double det = 0.0;
  double ratio = 1.0;
};

Sample measure(const FlowBackground& bg, const FlowState& st) {
  const Mat jn = normalized_jacobi(bg, st);
  Eigen::JacobiSVD<Mat> svd(jn);
  const Vec& sv = svd.singularValues();
  Sample out;
  out.s = st.s;
  out.det = jn.determinant();
  out.ratio = sv(0) > 0.0 ? sv(sv.size() - 1) / sv(0) : 0.0;
  return out;
}

// Golden-section minimization of f on [a, b] down to width `tol`.
template <class F>
std::pair<double, double> golden_min(F f, double a, double b, double tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

struct Candidate {
  double s;
  bool sign_change;
};

}  // namespace

// ---------------------------------------------------------------------------

JacobiSolution::JacobiSolution(LGeodesicPath path, std::shared_ptr<const Trajectory> traj, Vec coeffs)
    : path_(std::move(path)), traj_(std::move(traj)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != traj_->layout().k())
    throw Error(ErrorKind::InvalidArgument, "coefficient vector does not match the Jacobi block");
}

Vec JacobiSolution::frame_components(double s) const { return traj_->at(s).U * coeffs_; }

Vec JacobiSolution::frame_derivative(double s) const { return traj_->at(s).DU * coeffs_; }

TangentVec JacobiSolution::U(double s) const {
  const FlowState st = traj_->at(s);
  return st.E * (st.U * coeffs_);
}

TangentVec JacobiSolution::DU(double s) const {
  const FlowState st = traj_->at(s);
  return st.E * (st.DU * coeffs_);
}

JacobiSolution jacobi_integrate_frame(const LGeodesicPath& path, const Vec& u0, const Vec& w0, double tol) {
  const int n = path.dim();
  if (u0.size() != n || w0.size() != n) throw Error(ErrorKind::InvalidArgument, "initial data has wrong dimension");
  Mat U0(n, 1), W0(n, 1);
  U0.col(0) = u0;
  W0.col(0) = w0;
  auto traj = integrate_trajectory(path.background(), path.base_point(), path.initial_vector(), path.s_max(),
                                   U0, W0, flow_options(path, tol));
  return JacobiSolution(path, std::move(traj), Vec::Ones(1));
}

JacobiSolution jacobi_integrate(const LGeodesicPath& path, const TangentVec& u0, const TangentVec& w0,
                                double tol) {
  const Mat E0 = orthonormal_frame(path.background(), path.base_point(), Tau(0.0));
  const auto lu = E0.partialPivLu();
  return jacobi_integrate_frame(path, lu.solve(u0), lu.solve(w0), tol);
}

// ---------------------------------------------------------------------------

JacobiMatrix::JacobiMatrix(LGeodesicPath path, std::shared_ptr<const Trajectory> traj)
    : path_(std::move(path)), traj_(std::move(traj)) {}

Mat normalized_jacobi(const FlowBackground& bg, const FlowState& st) {
  const Mat g = metric_at(bg, st.x, Tau(st.s * st.s));
  const Mat G = st.E.transpose() * g * st.E;
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::EigensolverFailure, "frame Gram matrix is not SPD");
  const Mat L = llt.matrixL();
  return L.transpose() * st.U;
}

Mat JacobiMatrix::normalized(double s) const { return normalized_jacobi(path_.background(), traj_->at(s)); }

JacobiMatrix jacobi_matrix(const LGeodesicPath& path, double tol) {
  const int n = path.dim();
  auto traj = integrate_trajectory(path.background(), path.base_point(), path.initial_vector(), path.s_max(),
                                   Mat::Zero(n, n), Mat::Identity(n, n), flow_options(path, tol));
  return JacobiMatrix(path, std::move(traj));
}

// ---------------------------------------------------------------------------

ConjugateReport conjugate_scan(const LGeodesicPath& path, const ScanOptions& opts) {
  if (!(opts.sep > 0.0) || !(opts.delta > 0.0) || !(opts.root_tol > 0.0))
    throw Error(ErrorKind::InvalidArgument, "scan thresholds must be positive");
  const FlowBackground& bg = path.background();
  const int n = path.dim();
  const double s_max = path.s_max();
  FlowIntegrator fi(bg, path.base_point(), path.initial_vector(), s_max, Mat::Zero(n, n), Mat::Identity(n, n),
                    flow_options(path, opts.tol));
  const FlowLayout layout = fi.layout();

  std::deque<FlowStep> recent;   // last two steps
  std::deque<Sample> samples;    // samples at the ends of those steps, plus one before
  std::vector<Candidate> cands;
  long count = 0;

  auto eval_at = [&](double s) -> FlowState {
    for (const FlowStep& st : recent)
      if (s >= st.s0 && s <= st.s1) return evaluate_step(st, layout, s);
    return evaluate_step(s < recent.front().s0 ? recent.front() : recent.back(), layout, s);
  };
  auto ratio_at = [&](double s) { return measure(bg, eval_at(s)).ratio; };
  auto det_at = [&](double s) { return measure(bg, eval_at(s)).det; };

  auto bisect = [&](double a, double b) {
    std::uintmax_t iters = 200;
    auto stop = [&](double lo, double hi) { return std::abs(hi - lo) < opts.root_tol; };
    const auto r = boost::math::tools::toms748_solve(det_at, a, b, stop, iters);
    return 0.5 * (r.first + r.second);
  };

  fi.run([&](const FlowStep& step) {
    if (!(step.s1 > step.s0)) return;
    recent.push_back(step);
    if (recent.size() > 2) recent.pop_front();
    const Sample cur = measure(bg, evaluate_step(step, layout, step.s1));
    ++count;

    if (samples.empty()) {
      // J(s) ~ s I near s = 0, so det > 0 just after the start.
      if (cur.det < 0.0) {
        double lo = step.s1 * 1e-6;
        if (det_at(lo) > 0.0) cands.push_back({bisect(lo, step.s1), true});
      }
    } else {
      const Sample& prev = samples.back();
      if ((prev.det > 0.0 && cur.det < 0.0) || (prev.det < 0.0 && cur.det > 0.0))
        cands.push_back({bisect(prev.s, cur.s), true});
    }
    samples.push_back(cur);
    if (samples.size() > 3) samples.pop_front();

    if (samples.size() == 3) {
      const Sample& a = samples[0];
      const Sample& b = samples[1];
      const Sample& c = samples[2];
      if (b.ratio < a.ratio && b.ratio <= c.ratio && b.ratio < 0.999) {
        const auto m = golden_min(ratio_at, a.s, c.s, opts.root_tol);
        if (m.second < opts.delta) cands.push_back({m.first, false});
      }
    }
  });

  ConjugateReport rep;
  rep.samples = count;
  const Sample& last = samples.back();
  rep.endpoint_sigma_ratio = last.ratio;
  rep.endpoint_conjugate = last.ratio < opts.delta;
  if (samples.size() >= 2 && last.ratio < samples[samples.size() - 2].ratio) {
    const auto m = golden_min(ratio_at, samples[samples.size() - 2].s, s_max, opts.root_tol);
    if (m.second < opts.delta) cands.push_back({m.first, false});
  }

  std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) { return x.s < y.s; });
  const double merge = std::min(1e-7, 0.1 * opts.sep);
  std::vector<Candidate> roots;
  for (const Candidate& c : cands) {
    if (!roots.empty() && c.s - roots.back().s < merge) {
      // prefer the bracketed root, it is located more accurately
      if (c.sign_change && !roots.back().sign_change) roots.back() = c;
      continue;
    }
    roots.push_back(c);
  }
  roots.erase(std::remove_if(roots.begin(), roots.end(),
                             [&](const Candidate& c) { return s_max - c.s < 1e-9 * std::max(1.0, s_max); }),
              roots.end());
  for (std::size_t i = 1; i < roots.size(); ++i) {
    if (roots[i].s - roots[i - 1].s < opts.sep)
      throw Error(ErrorKind::UnresolvedCluster,
                  "conjugate points closer than the resolvable separation near s = " + std::to_string(roots[i].s));
  }

  // Dense evaluation at the roots needs the full trajectory; recompute once.
  std::shared_ptr<const Trajectory> traj;
  if (!roots.empty())
    traj = integrate_trajectory(bg, path.base_point(), path.initial_vector(), s_max, Mat::Zero(n, n),
                                Mat::Identity(n, n), flow_options(path, opts.tol));
  for (const Candidate& c : roots) {
    const Mat jn = normalized_jacobi(bg, traj->at(c.s));
    Eigen::JacobiSVD<Mat> svd(jn, Eigen::ComputeFullV);
    const Vec& sv = svd.singularValues();
    ConjugatePoint cp;
    cp.s = c.s;
    cp.tau = c.s * c.s;
    cp.sign_change = c.sign_change;
    int mult = 0;
    for (int i = sv.size() - 1; i >= 0; --i) {
      const double r = sv(0) > 0.0 ? sv(i) / sv(0) : 0.0;
      cp.sigma_ratios.push_back(r);
      if (r < opts.delta) ++mult;
    }
    if (mult == 0 && c.sign_change) mult = 1;
    cp.multiplicity = mult;
    cp.kernel = svd.matrixV().rightCols(mult);
    rep.total_multiplicity += mult;
    rep.points.push_back(std::move(cp));
  }
  return rep;
}

ConjugateReport conjugate_scan(const LGeodesicPath& path, double tol, double sep) {
  ScanOptions o;
  o.tol = tol;
  o.sep = sep;
  return conjugate_scan(path, o);
}

nlohmann::json to_json(const ConjugateReport& report) {
  nlohmann::json pts = nlohmann::json::array();
  for (const ConjugatePoint& p : report.points) {
    pts.push_back({{"tau", p.tau},
                   {"s", p.s},
                   {"multiplicity", p.multiplicity},
                   {"sign_change", p.sign_change},
                   {"sigma_ratios", p.sigma_ratios}});
  }
  return {{"points", pts},
          {"total_multiplicity", report.total_multiplicity},
          {"endpoint_conjugate", report.endpoint_conjugate},
          {"endpoint_sigma_ratio", report.endpoint_sigma_ratio},
          {"samples", report.samples}};
}

// ---------------------------------------------------------------------------

Mat dlexp(const FlowBackground& bg, const ChartPoint& p, const TangentVec& v, Tau tau_bar, double tol) {
  const LGeodesicPath path = shoot(bg, p, v, tau_bar, tol);
  const JacobiMatrix jm = jacobi_matrix(path, tol);
  const FlowState st = jm.state(path.s_max());
  const ChartTransition tr = to_chart(bg, st.x, path.endpoint().chart_id);
  const Mat E0 = orthonormal_frame(bg, p, Tau(0.0));
  return 2.0 * tr.jacobian * st.E * st.U * E0.inverse();
}

JacobiSolution jacobi_bvp_frame(const JacobiMatrix& jm, double s_end, const Vec& w_frame, double delta) {
  const FlowState st = jm.state(s_end);
  const Mat jn = normalized_jacobi(jm.path().background(), st);
  Eigen::JacobiSVD<Mat> svd(jn);
  const Vec& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(sv.size() - 1) / sv(0) < delta)
    throw Error(ErrorKind::ConjugateEndpoint, "endpoint is conjugate to the base point");
  const Vec c = st.U.colPivHouseholderQr().solve(w_frame);
  return jm.combination(c);
}

JacobiSolution jacobi_bvp(const LGeodesicPath& path, const TangentVec& w, double tol) {
  if (w.size() != path.dim()) throw Error(ErrorKind::InvalidArgument, "target vector has wrong dimension");
  const JacobiMatrix jm = jacobi_matrix(path, tol);
  const FlowState st = jm.state(path.s_max());
  const ChartPoint end = path.endpoint();
  // w is given in the chart of path.endpoint(); express it in the chart of st.x
  const ChartTransition tr = to_chart(path.background(), end, st.x.chart_id);
  const Vec w_local = tr.jacobian * w;
  const Vec wf = st.E.partialPivLu().solve(w_local);
  return jacobi_bvp_frame(jm, path.s_max(), wf);
}

double variation_field_check(const FlowBackground& bg, const ChartPoint& p, const TangentVec& v,
                             const TangentVec& dv, Tau tau_bar, double eps, double tol) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
  const LGeodesicPath base = shoot(bg, p, v, tau_bar, tol);
  const LGeodesicPath moved = shoot(bg, p, v + eps * dv, tau_bar, tol);
  const JacobiSolution js = jacobi_integrate(base, Vec::Zero(bg.dim()), 2.0 * dv, tol);
  const int samples = 100;
  double worst = 0.0;
  for (int i = 1; i <= samples; ++i) {
    const double s = base.s_max() * i / samples;
    // difference the two shots against each other; the Jacobi run has its own step grid
    const ChartPoint x0 = base.point(s);
    const ChartPoint x1 = to_chart(bg, moved.point(s), x0.chart_id).point;
    const FlowState st = js.state(s);
    const Vec u = to_chart(bg, st.x, x0.chart_id).jacobian * (st.E * st.U.col(0));
    const Vec d = (x1.coords - x0.coords) / eps - u;
    const Mat g = metric_at(bg, x0, Tau(s * s));
    worst = std::max(worst, std::sqrt(std::max(0.0, d.dot(g * d))));
  }
  return worst;
}

}  // namespace lgeom
