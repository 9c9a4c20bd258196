#include "lgeom/flowbg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lgeom {

Tau::Tau(double value) : value_(value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::NegativeTau, "tau must be finite and >= 0, got " + std::to_string(value));
  }
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Vec TensorPack::christoffel_contract(const Vec& a, const Vec& b) const {
  const int n = dim();
  Vec out = Vec::Zero(n);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      if (a[i] == 0.0) continue;
      for (int j = 0; j < n; ++j) acc += christoffel(k, i, j) * a[i] * b[j];
    }
    out[k] = acc;
  }
  return out;
}

Vec TensorPack::curvature(const Vec& a, const Vec& b, const Vec& c) const {
  const int n = dim();
  Vec out = Vec::Zero(n);
  for (int l = 0; l < n; ++l) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      if (a[i] == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        if (b[j] == 0.0) continue;
        for (int k = 0; k < n; ++k) acc += riemann(l, i, j, k) * a[i] * b[j] * c[k];
      }
    }
    out[l] = acc;
  }
  return out;
}

double TensorPack::cov_ricci_form(const Vec& u, const Vec& a, const Vec& b) const {
  const int n = dim();
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) acc += cov_ricci(i, j, k) * u[i] * a[j] * b[k];
  return acc;
}

Vec TensorPack::cov_ricci_vec(const Vec& u, const Vec& w) const {
  const int n = dim();
  Vec lowered = Vec::Zero(n);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += cov_ricci(i, j, k) * u[i] * w[j];
    lowered[k] = acc;
  }
  return g_inv * lowered;
}

// ---------------------------------------------------------------------------

FlowBackground FlowBackground::euclidean(int n) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "euclidean background needs n >= 2");
  return FlowBackground(BackgroundKind::StaticEuclidean, n, 1.0);
}

FlowBackground FlowBackground::sphere(int n, double c0) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "sphere background needs n >= 2");
  if (!(c0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "sphere background needs c0 > 0");
  return FlowBackground(BackgroundKind::ShrinkingSphere, n, c0);
}

FlowBackground FlowBackground::cylinder(int n, double c0) {
  if (n < 3) throw Error(ErrorKind::InvalidArgument, "cylinder background needs n >= 3");
  if (!(c0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "cylinder background needs c0 > 0");
  return FlowBackground(BackgroundKind::ShrinkingCylinder, n, c0);
}

int FlowBackground::round_dim() const noexcept {
  switch (kind_) {
    case BackgroundKind::StaticEuclidean: return 0;
    case BackgroundKind::ShrinkingSphere: return n_;
    case BackgroundKind::ShrinkingCylinder: return n_ - 1;
  }
  return 0;
}

double FlowBackground::scale(Tau tau) const {
  const int m = round_dim();
  if (m == 0) return 1.0;
  // Ric(g_unit) = (m-1) g_unit is scale invariant, so c' = 2(m-1).
  return c0_ + 2.0 * (m - 1) * tau.value();
}

nlohmann::json FlowBackground::to_json() const {
  nlohmann::json j;
  switch (kind_) {
    case BackgroundKind::StaticEuclidean: j["kind"] = "euclidean"; break;
    case BackgroundKind::ShrinkingSphere: j["kind"] = "sphere"; break;
    case BackgroundKind::ShrinkingCylinder: j["kind"] = "cylinder"; break;
  }
  j["n"] = n_;
  j["c0"] = c0_;
  return j;
}

FlowBackground FlowBackground::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "background must be a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string())
    throw Error(ErrorKind::InvalidConfig, "background.kind must be a string");
  if (!j.contains("n") || !j["n"].is_number_integer())
    throw Error(ErrorKind::InvalidConfig, "background.n must be an integer");
  const std::string kind = j["kind"].get<std::string>();
  const int n = j["n"].get<int>();
  double c0 = 1.0;
  if (j.contains("c0")) {
    if (!j["c0"].is_number()) throw Error(ErrorKind::InvalidConfig, "background.c0 must be a number");
    c0 = j["c0"].get<double>();
  } else if (kind != "euclidean") {
    throw Error(ErrorKind::InvalidConfig, "background.c0 is required for kind " + kind);
  }
  try {
    if (kind == "euclidean") return euclidean(n);
    if (kind == "sphere") return sphere(n, c0);
    if (kind == "cylinder") return cylinder(n, c0);
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
  throw Error(ErrorKind::InvalidConfig, "unknown background kind '" + kind + "'");
}

// ---------------------------------------------------------------------------

namespace {

double round_radius2(const FlowBackground& bg, const Vec& coords) {
  return coords.head(bg.round_dim()).squaredNorm();
}

// Unit sphere S^m in R^{m+1}. Chart 0 projects from the north pole
// (origin -> south pole), chart 1 from the south pole.
Vec embed(const Vec& y, int chart) {
  const int m = static_cast<int>(y.size());
  const double r2 = y.squaredNorm();
  Vec X(m + 1);
  X.head(m) = 2.0 * y / (1.0 + r2);
  X[m] = (chart == 0 ? (r2 - 1.0) : (1.0 - r2)) / (1.0 + r2);
  return X;
}

Mat embed_jacobian(const Vec& y, int chart) {
  const int m = static_cast<int>(y.size());
  const double rho = 1.0 + y.squaredNorm();
  Mat D(m + 1, m);
  D.topRows(m) = 2.0 / rho * Mat::Identity(m, m) - 4.0 / (rho * rho) * y * y.transpose();
  D.row(m) = (chart == 0 ? 4.0 : -4.0) / (rho * rho) * y.transpose();
  return D;
}

Vec unembed(const Vec& X, int chart) {
  const int m = static_cast<int>(X.size()) - 1;
  const double denom = chart == 0 ? 1.0 - X[m] : 1.0 + X[m];
  return X.head(m) / denom;
}

}  // namespace

void check_chart(const FlowBackground& bg, const ChartPoint& x) {
  if (x.coords.size() != bg.dim())
    throw Error(ErrorKind::InvalidArgument, "chart point has wrong dimension");
  if (!x.coords.allFinite()) throw Error(ErrorKind::InvalidChart, "non-finite coordinates");
  if (bg.has_charts()) {
    if (x.chart_id != 0 && x.chart_id != 1)
      throw Error(ErrorKind::InvalidChart, "chart_id must be 0 or 1");
    if (round_radius2(bg, x.coords) > kMaxChartRadius * kMaxChartRadius)
      throw Error(ErrorKind::InvalidChart, "stereographic radius exceeds chart domain");
  }
}

Mat metric_at(const FlowBackground& bg, const ChartPoint& x, Tau tau) {
  check_chart(bg, x);
  const int n = bg.dim();
  Mat g = Mat::Identity(n, n);
  const int m = bg.round_dim();
  if (m > 0) {
    const double rho = 1.0 + round_radius2(bg, x.coords);
    const double conf = 4.0 * bg.scale(tau) / (rho * rho);
    for (int i = 0; i < m; ++i) g(i, i) = conf;
  }
  return g;
}

TensorPack tensors_at(const FlowBackground& bg, const ChartPoint& x, Tau tau) {
  const int n = bg.dim();
  TensorPack t;
  t.g = metric_at(bg, x, tau);
  t.christoffel = Tensor3(n);
  t.riemann = Tensor4(n);
  t.ricci = Mat::Zero(n, n);
  t.grad_R = Vec::Zero(n);
  t.hess_R = Mat::Zero(n, n);
  t.cov_ricci = Tensor3(n);
  t.g_inv = Mat::Identity(n, n);

  const int m = bg.round_dim();
  if (m == 0) return t;

  const Vec y = x.coords.head(m);
  const double rho = 1.0 + y.squaredNorm();
  const double conf = t.g(0, 0);
  for (int i = 0; i < m; ++i) t.g_inv(i, i) = 1.0 / conf;

  // Conformal metric e^{2 phi} delta: Gamma^k_ij = d_ik phi_j + d_jk phi_i - d_ij phi_k.
  Vec dphi = -2.0 * y / rho;
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double v = 0.0;
        if (i == k) v += dphi[j];
        if (j == k) v += dphi[i];
        if (i == j) v -= dphi[k];
        t.christoffel(k, i, j) = v;
      }

  // Constant sectional curvature K on the round block:
  // R(X,Y)Z = K (<Y,Z> X - <X,Z> Y).
  const double K = 1.0 / bg.scale(tau);
  for (int l = 0; l < m; ++l)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
          double v = 0.0;
          if (l == i) v += t.g(j, k);
          if (l == j) v -= t.g(i, k);
          t.riemann(l, i, j, k) = K * v;
        }

  for (int i = 0; i < m; ++i) t.ricci(i, i) = (m - 1) * K * conf;
  t.scalar_R = m * (m - 1) * K;
  return t;
}

Mat dg_dtau_at(const FlowBackground& bg, const ChartPoint& x, Tau tau) {
  const int n = bg.dim();
  Mat d = Mat::Zero(n, n);
  const int m = bg.round_dim();
  if (m == 0) {
    check_chart(bg, x);
    return d;
  }
  // g_round = c(tau) g_unit with c' = 2(m-1).
  const Mat g = metric_at(bg, x, tau);
  const double rate = 2.0 * (m - 1) / bg.scale(tau);
  d.topLeftCorner(m, m) = rate * g.topLeftCorner(m, m);
  return d;
}

ChartTransition switch_chart(const FlowBackground& bg, const ChartPoint& x) {
  if (!bg.has_charts())
    throw Error(ErrorKind::NotApplicable, "chart transitions need a sphere or cylinder background");
  check_chart(bg, x);
  const int n = bg.dim();
  const int m = bg.round_dim();
  const Vec y = x.coords.head(m);
  const double r2 = y.squaredNorm();
  if (r2 == 0.0) throw Error(ErrorKind::ChartEscape, "chart center has no image in the opposite chart");

  ChartTransition out;
  out.point.coords = x.coords;
  out.point.coords.head(m) = y / r2;
  out.point.chart_id = 1 - x.chart_id;
  out.jacobian = Mat::Identity(n, n);
  out.jacobian.topLeftCorner(m, m) = (Mat::Identity(m, m) * r2 - 2.0 * y * y.transpose()) / (r2 * r2);
  return out;
}

ChartTransition recenter_chart(const FlowBackground& bg, const ChartPoint& x) {
  if (!bg.has_charts())
    throw Error(ErrorKind::NotApplicable, "recentering needs a sphere or cylinder background");
  check_chart(bg, x);
  if (round_radius2(bg, x.coords) > 1.0) return switch_chart(bg, x);
  return {x, Mat::Identity(bg.dim(), bg.dim())};
}

ChartTransition to_chart(const FlowBackground& bg, const ChartPoint& x, int chart_id) {
  if (!bg.has_charts() || x.chart_id == chart_id) return {x, Mat::Identity(bg.dim(), bg.dim())};
  return switch_chart(bg, x);
}

ChartPoint slice_exp(const FlowBackground& bg, const ChartPoint& x, Tau tau, const TangentVec& v) {
  check_chart(bg, x);
  (void)tau;  // geodesics of c * g_unit do not depend on c
  ChartPoint out = x;
  const int n = bg.dim();
  const int m = bg.round_dim();
  out.coords.tail(n - m) += v.tail(n - m);
  if (m == 0) return out;

  const Vec y = x.coords.head(m);
  const Vec X = embed(y, x.chart_id);
  const Vec w = embed_jacobian(y, x.chart_id) * v.head(m);
  const double t = w.norm();
  if (t == 0.0) return out;
  const Vec Xn = std::cos(t) * X + std::sin(t) / t * w;

  // Keep the input chart unless the image lands near its pole.
  int chart = x.chart_id;
  const double denom = chart == 0 ? 1.0 - Xn[m] : 1.0 + Xn[m];
  Vec yn;
  if (denom > 0.0) yn = Xn.head(m) / denom;
  if (denom <= 0.0 || yn.norm() > kRecenterThreshold) {
    chart = 1 - chart;
    yn = unembed(Xn, chart);
  }
  out.coords.head(m) = yn;
  out.chart_id = chart;
  return out;
}

Mat orthonormal_frame(const FlowBackground& bg, const ChartPoint& x, Tau tau) {
  const Mat g = metric_at(bg, x, tau);
  Eigen::LLT<Mat> llt(g);
  // g = L L^T  =>  E = L^{-T} satisfies E^T g E = I.
  const Mat L = llt.matrixL();
  return L.transpose().triangularView<Eigen::Upper>().solve(Mat::Identity(g.rows(), g.cols()));
}

}  // namespace lgeom
