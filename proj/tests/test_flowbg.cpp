#include <doctest.h>

#include <cmath>
#include <random>

#include "closed_forms.hpp"
#include "lgeom/errors.hpp"
#include "lgeom/flowbg.hpp"

using namespace lgeom;

namespace {

// Stereographic round factor, written out independently of the library.
Mat reference_metric(const FlowBackground& bg, const Vec& x, double tau) {
  const int n = bg.dim(), m = bg.round_dim();
  Mat g = Mat::Identity(n, n);
  if (m > 0) {
    const double r2 = x.head(m).squaredNorm();
    const double conf = 4.0 / ((1.0 + r2) * (1.0 + r2));
    g.topLeftCorner(m, m) *= closed::scale(bg.c0(), m, tau) * conf;
  }
  return g;
}

std::vector<FlowBackground> all_backgrounds() {
  return {FlowBackground::euclidean(2), FlowBackground::euclidean(3), FlowBackground::sphere(2, 1.0),
          FlowBackground::sphere(3, 0.4), FlowBackground::cylinder(3, 1.0), FlowBackground::cylinder(4, 0.2)};
}

Vec random_point(const FlowBackground& bg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.2, 1.2);
  Vec x(bg.dim());
  for (int i = 0; i < bg.dim(); ++i) x(i) = U(rng);
  return x;
}

// lowered R_{lijk} = g_lm R^m_ijk = <R(d_i, d_j) d_k, d_l>
double lowered(const TensorPack& t, int l, int i, int j, int k) {
  double s = 0.0;
  for (int m = 0; m < t.dim(); ++m) s += t.g(l, m) * t.riemann(m, i, j, k);
  return s;
}

}  // namespace

TEST_CASE("tau rejects negative and non-finite values") {
  CHECK_NOTHROW(Tau(0.0));
  CHECK_THROWS_AS(Tau(-1e-300), Error);
  CHECK_THROWS_AS(Tau(std::nan("")), Error);
  try {
    Tau(-1.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NegativeTau);
  }
}

TEST_CASE("flat tensors at the origin") {
  const TensorPack t = tensors_at(FlowBackground::euclidean(2), ChartPoint{Vec::Zero(2), 0}, Tau(1.0));
  CHECK(t.g.isApprox(Mat::Identity(2, 2)));
  CHECK(t.ricci.norm() == 0.0);
  CHECK(t.scalar_R == 0.0);
  CHECK(t.christoffel.max_abs() == 0.0);
}

TEST_CASE("sphere scalar curvature and vanishing derivatives") {
  const FlowBackground bg = FlowBackground::sphere(2, 1.0);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const ChartPoint x{random_point(bg, rng), i % 2};
    const TensorPack t = tensors_at(bg, x, Tau(0.5));
    CHECK(std::abs(t.scalar_R - 1.0) < 1e-12);
    CHECK(t.grad_R.norm() == 0.0);
    CHECK(t.hess_R.norm() == 0.0);
    CHECK(t.cov_ricci.max_abs() == 0.0);
  }
}

TEST_CASE("metric matches the written-out closed form") {
  std::mt19937_64 rng(4);
  for (const FlowBackground& bg : all_backgrounds()) {
    for (int i = 0; i < 20; ++i) {
      const Vec x = random_point(bg, rng);
      const double tau = 0.1 * i;
      CHECK((metric_at(bg, ChartPoint{x, 0}, Tau(tau)) - reference_metric(bg, x, tau)).norm() < 1e-13);
    }
  }
}

TEST_CASE("dg/dtau") {
  const ChartPoint x{Vec::Zero(2), 0};
  CHECK(dg_dtau_at(FlowBackground::euclidean(2), x, Tau(1.0)).norm() == 0.0);
  std::mt19937_64 rng(5);
  const FlowBackground s2 = FlowBackground::sphere(2, 1.0);
  const Vec y = random_point(s2, rng);
  const Mat g_unit = reference_metric(s2, y, 0.0);  // c(0) = 1
  CHECK((dg_dtau_at(s2, ChartPoint{y, 0}, Tau(0.25)) - 2.0 * g_unit).norm() < 1e-12);
  for (const FlowBackground& bg : all_backgrounds()) {
    for (int i = 0; i < 50; ++i) {
      const ChartPoint p{random_point(bg, rng), 0};
      const double tau = 0.05 + 0.04 * i, h = 1e-4;
      const Mat fd = (metric_at(bg, p, Tau(tau + h)) - metric_at(bg, p, Tau(tau - h))) / (2 * h);
      const TensorPack t = tensors_at(bg, p, Tau(tau));
      CHECK((fd - 2.0 * t.ricci).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((dg_dtau_at(bg, p, Tau(tau)) - 2.0 * t.ricci).norm() == 0.0);
    }
  }
}

TEST_CASE("tensor pack invariants") {
  std::mt19937_64 rng(6);
  for (const FlowBackground& bg : all_backgrounds()) {
    const int n = bg.dim();
    for (int trial = 0; trial < 10; ++trial) {
      const ChartPoint x{random_point(bg, rng), trial % (bg.has_charts() ? 2 : 1)};
      const double tau = 0.3 * trial;
      const TensorPack t = tensors_at(bg, x, Tau(tau));
      CHECK(t.g.llt().info() == Eigen::Success);
      CHECK((t.g * t.g_inv - Mat::Identity(n, n)).norm() < 1e-12);
      CHECK((t.ricci - t.ricci.transpose()).norm() < 1e-14);
      CHECK((t.hess_R - t.hess_R.transpose()).norm() < 1e-14);
      CHECK(std::abs((t.g_inv * t.ricci).trace() - t.scalar_R) < 1e-10);

      // Ric_jk = R^i_ijk
      Mat contracted = Mat::Zero(n, n);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int i = 0; i < n; ++i) contracted(j, k) += t.riemann(i, i, j, k);
      CHECK((contracted - t.ricci).norm() < 1e-10 * (1.0 + t.ricci.norm()));

      double scale = 1.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) scale = std::max(scale, std::abs(t.g(a, b)));
      for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
              const double r = lowered(t, l, i, j, k);
              CHECK(std::abs(r + lowered(t, l, j, i, k)) < 1e-12 * scale * scale);
              CHECK(std::abs(r + lowered(t, k, i, j, l)) < 1e-12 * scale * scale);
              CHECK(std::abs(r - lowered(t, j, k, l, i)) < 1e-12 * scale * scale);
            }

      // metric compatibility: d_k g_ij = g_mj Gamma^m_ki + g_im Gamma^m_kj
      const double h = 1e-6;
      for (int k = 0; k < n; ++k) {
        ChartPoint xp = x, xm = x;
        xp.coords(k) += h;
        xm.coords(k) -= h;
        const Mat dg = (metric_at(bg, xp, Tau(tau)) - metric_at(bg, xm, Tau(tau))) / (2 * h);
        Mat rebuilt(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int m = 0; m < n; ++m) s += t.g(m, j) * t.christoffel(m, k, i) + t.g(i, m) * t.christoffel(m, k, j);
            rebuilt(i, j) = s;
          }
        CHECK((dg - rebuilt).cwiseAbs().maxCoeff() < 1e-6 * (1.0 + dg.norm()));
      }
    }
  }
}

TEST_CASE("sphere sectional curvature is 1/c(tau)") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N;
  for (int n : {2, 3, 4}) {
    const FlowBackground bg = FlowBackground::sphere(n, 0.7);
    for (int trial = 0; trial < 10; ++trial) {
      const ChartPoint x{0.5 * random_point(bg, rng), 0};
      const double tau = 0.2 * trial;
      const TensorPack t = tensors_at(bg, x, Tau(tau));
      Vec X(n), Y(n);
      for (int i = 0; i < n; ++i) X(i) = N(rng), Y(i) = N(rng);
      const double num = t.curvature(X, Y, Y).dot(t.g * X);
      const double xx = X.dot(t.g * X), yy = Y.dot(t.g * Y), xy = X.dot(t.g * Y);
      CHECK(std::abs(num / (xx * yy - xy * xy) - 1.0 / closed::scale(0.7, n, tau)) < 1e-10);
    }
  }
}

TEST_CASE("cylinder Ricci is not proportional to the metric") {
  const FlowBackground bg = FlowBackground::cylinder(3, 1.0);
  const TensorPack t = tensors_at(bg, ChartPoint{Vec::Zero(3), 0}, Tau(0.5));
  const Mat endo = t.ricci_endo();
  CHECK(std::abs(endo(2, 2)) < 1e-15);
  CHECK(std::abs(endo(0, 0) - 1.0 / closed::scale(1.0, 2, 0.5)) < 1e-12);
  CHECK(std::abs(t.scalar_R - 2.0 / closed::scale(1.0, 2, 0.5)) < 1e-12);
}

TEST_CASE("chart transitions") {
  const FlowBackground bg = FlowBackground::sphere(2, 1.0);
  const ChartTransition id = recenter_chart(bg, ChartPoint{Vec::Zero(2), 0});
  CHECK(id.point.chart_id == 0);
  CHECK((id.jacobian - Mat::Identity(2, 2)).norm() == 0.0);

  Vec far(2);
  far << 3.0, 0.0;
  const ChartTransition tr = recenter_chart(bg, ChartPoint{far, 0});
  CHECK(tr.point.coords.norm() < 1.0);
  CHECK(tr.point.chart_id == 1);
  // inversion y -> y / |y|^2
  CHECK((tr.point.coords - far / far.squaredNorm()).norm() < 1e-15);
  // pullback: g(x) = J^T g'(x') J
  const Mat g = metric_at(bg, ChartPoint{far, 0}, Tau(0.3));
  const Mat g2 = metric_at(bg, tr.point, Tau(0.3));
  CHECK((tr.jacobian.transpose() * g2 * tr.jacobian - g).norm() < 1e-12 * g.norm());

  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const ChartPoint x{random_point(bg, rng) * 1.5, 0};
    const ChartTransition a = switch_chart(bg, x);
    const ChartTransition b = switch_chart(bg, a.point);
    CHECK(b.point.chart_id == 0);
    CHECK((b.point.coords - x.coords).norm() < 1e-12);
    CHECK((b.jacobian * a.jacobian - Mat::Identity(2, 2)).norm() < 1e-10);
  }
  CHECK_THROWS_AS(recenter_chart(FlowBackground::euclidean(2), ChartPoint{Vec::Zero(2), 0}), Error);
  CHECK_THROWS_AS(tensors_at(bg, ChartPoint{Vec::Constant(2, 1e6), 0}, Tau(0.0)), Error);
}

TEST_CASE("cylinder chart switch leaves the line coordinate alone") {
  const FlowBackground bg = FlowBackground::cylinder(3, 1.0);
  Vec x(3);
  x << 2.5, 1.0, -4.0;
  const ChartTransition tr = switch_chart(bg, ChartPoint{x, 0});
  CHECK(tr.point.coords(2) == -4.0);
  CHECK(tr.jacobian(2, 2) == 1.0);
}

TEST_CASE("slice exponential follows slice geodesics") {
  // at the origin g = 4c I, so coordinate length |v| travels angle 2|v| on the
  // round factor and lands at stereographic radius tan(|v|)
  const FlowBackground bg = FlowBackground::sphere(2, 1.0);
  for (double r : {0.05, 0.3, 0.7, 1.2}) {
    Vec v(2);
    v << r * 0.6, r * 0.8;
    const ChartPoint y = to_chart(bg, slice_exp(bg, ChartPoint{Vec::Zero(2), 0}, Tau(0.5), v), 0).point;
    CHECK(std::abs(y.coords.norm() - std::tan(r)) < 1e-12 * (1.0 + std::tan(r)));
    CHECK(std::abs(y.coords(0) * 0.8 - y.coords(1) * 0.6) < 1e-12);
  }
  const FlowBackground e = FlowBackground::euclidean(3);
  Vec p(3), w(3);
  p << 1, 2, 3;
  w << -0.5, 0.25, 2;
  CHECK((slice_exp(e, ChartPoint{p, 0}, Tau(1.0), w).coords - (p + w)).norm() == 0.0);
}

TEST_CASE("orthonormal frame") {
  std::mt19937_64 rng(9);
  for (const FlowBackground& bg : all_backgrounds()) {
    const ChartPoint x{random_point(bg, rng), 0};
    const Mat E = orthonormal_frame(bg, x, Tau(0.7));
    const Mat G = E.transpose() * metric_at(bg, x, Tau(0.7)) * E;
    CHECK((G - Mat::Identity(bg.dim(), bg.dim())).norm() < 1e-13);
  }
}

TEST_CASE("background json round trip and validation") {
  const FlowBackground bg = FlowBackground::cylinder(4, 0.3);
  const FlowBackground back = FlowBackground::from_json(bg.to_json());
  CHECK(back.kind() == BackgroundKind::ShrinkingCylinder);
  CHECK(back.dim() == 4);
  CHECK(back.c0() == 0.3);
  CHECK_THROWS_AS(FlowBackground::sphere(2, -1.0), Error);
  CHECK_THROWS_AS(FlowBackground::cylinder(1, 1.0), Error);
  CHECK_THROWS_AS(FlowBackground::from_json(nlohmann::json{{"kind", "torus"}, {"n", 2}}), Error);
}
