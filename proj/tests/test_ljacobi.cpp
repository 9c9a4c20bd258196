#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <random>

#include "closed_forms.hpp"
#include "lgeom/errors.hpp"
#include "lgeom/ljacobi.hpp"

using namespace lgeom;

namespace {

ChartPoint origin(int n) { return ChartPoint{Vec::Zero(n), 0}; }

Vec randn(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  Vec x(n);
  for (int i = 0; i < n; ++i) x(i) = N(rng);
  return x;
}

double g_norm(const FlowBackground& bg, const FlowState& st, const Vec& coords) {
  return std::sqrt(coords.dot(metric_at(bg, st.x, Tau(st.tau())) * coords));
}

double sigma_ratio(const Mat& A) {
  Eigen::JacobiSVD<Mat> svd(A);
  const Vec sv = svd.singularValues();
  return sv(sv.size() - 1) / sv(0);
}

// fast great circle on Sphere(2, 0.01): round speed 6 gives four conjugate points before s = 1
const double kC0 = 0.01;
Vec fast_v() {
  Vec v(2);
  v << 30.0, 0.0;
  return v;
}
double fast_vg() { return 2.0 * std::sqrt(kC0) * 30.0; }

}  // namespace

TEST_CASE("flat Jacobi field is linear in s") {
  Vec v(2), e2(2);
  v << 0.4, -0.9;
  e2 << 0, 1;
  const LGeodesicPath path = shoot(FlowBackground::euclidean(2), origin(2), v, Tau(1.0));
  const JacobiSolution U = jacobi_integrate(path, Vec::Zero(2), e2);
  for (int i = 0; i <= 10; ++i) {
    const double s = 0.1 * i;
    CHECK((U.U(s) - s * e2).norm() < 1e-13);
    CHECK((U.DU(s) - e2).norm() < 1e-13);
  }
  const JacobiSolution Z = jacobi_integrate(path, Vec::Zero(2), Vec::Zero(2));
  CHECK(Z.U(0.7).norm() == 0.0);
}

TEST_CASE("Jacobi field along the constant sphere curve") {
  // frame components satisfy u' = w c0 / c(s^2), so u = w sigma(s)
  for (int n : {2, 3}) {
    const double c0 = 0.8;
    const LGeodesicPath path = shoot(FlowBackground::sphere(n, c0), origin(n), Vec::Zero(n), Tau(2.0));
    std::mt19937_64 rng(20 + n);
    const Vec w = randn(n, rng);
    const JacobiSolution U = jacobi_integrate_frame(path, Vec::Zero(n), w);
    double prev = 0.0;
    for (int i = 1; i <= 20; ++i) {
      const double s = path.s_max() * i / 20.0;
      CHECK((U.frame_derivative(s) - w * c0 / closed::scale(c0, n, s * s)).norm() < 1e-9 * w.norm());
      CHECK((U.frame_components(s) - w * closed::sigma(c0, n, s)).norm() < 1e-9 * w.norm());
      const double nu = g_norm(path.background(), U.state(s), U.U(s));
      CHECK(nu > prev);
      prev = nu;
    }
    const JacobiMatrix J = jacobi_matrix(path);
    CHECK((J.at(1.0) - closed::sigma(c0, n, 1.0) * Mat::Identity(n, n)).norm() < 1e-9);
  }
}

TEST_CASE("Jacobi matrix near s = 0") {
  std::mt19937_64 rng(21);
  for (const FlowBackground& bg :
       {FlowBackground::euclidean(3), FlowBackground::sphere(3, 0.5), FlowBackground::cylinder(3, 0.5)}) {
    const LGeodesicPath path = shoot(bg, origin(3), randn(3, rng), Tau(1.0));
    const JacobiMatrix J = jacobi_matrix(path);
    CHECK((J.at(1e-6) / 1e-6 - Mat::Identity(3, 3)).norm() < 1e-5);
    CHECK(J.at(0.0).norm() == 0.0);
  }
  const LGeodesicPath flat = shoot(FlowBackground::euclidean(2), origin(2), Vec::Ones(2), Tau(1.0));
  CHECK((jacobi_matrix(flat).at(0.6) - 0.6 * Mat::Identity(2, 2)).norm() < 1e-13);
}

TEST_CASE("Jacobi integration is linear in the initial data") {
  std::mt19937_64 rng(22);
  const LGeodesicPath path = shoot(FlowBackground::cylinder(3, 0.3), origin(3), randn(3, rng), Tau(1.0));
  for (int t = 0; t < 5; ++t) {
    const Vec u1 = randn(3, rng), w1 = randn(3, rng), u2 = randn(3, rng), w2 = randn(3, rng);
    const double a = 0.7, b = -1.3;
    const JacobiSolution A = jacobi_integrate(path, u1, w1);
    const JacobiSolution B = jacobi_integrate(path, u2, w2);
    const JacobiSolution C = jacobi_integrate(path, a * u1 + b * u2, a * w1 + b * w2);
    for (double s : {0.2, 0.6, 1.0}) {
      const Vec lin = a * A.U(s) + b * B.U(s);
      CHECK((C.U(s) - lin).norm() < 1e-10 * (1.0 + lin.norm()));
    }
  }
}

TEST_CASE("U(0) = 0 gives U(s) = s DU(0) + O(s^2)") {
  std::mt19937_64 rng(23);
  const LGeodesicPath path = shoot(FlowBackground::sphere(2, 0.2), origin(2), randn(2, rng), Tau(1.0));
  const Vec w = randn(2, rng);
  const JacobiSolution U = jacobi_integrate(path, Vec::Zero(2), w);
  const double e1 = (U.U(1e-2) - 1e-2 * w).norm(), e2 = (U.U(1e-3) - 1e-3 * w).norm();
  CHECK(e1 / e2 > 50.0);
}

TEST_CASE("frame Gram matches the metric") {
  std::mt19937_64 rng(24);
  const FlowBackground bg = FlowBackground::cylinder(4, 0.4);
  const LGeodesicPath path = shoot(bg, origin(4), randn(4, rng), Tau(1.5));
  const JacobiSolution U = jacobi_integrate(path, randn(4, rng), randn(4, rng));
  const JacobiSolution V = jacobi_integrate(path, randn(4, rng), randn(4, rng));
  for (int i = 0; i <= 10; ++i) {
    const double s = path.s_max() * i / 10.0;
    const FlowState st = U.state(s);
    const Mat G = st.E.transpose() * metric_at(bg, st.x, Tau(s * s)) * st.E;
    const double via_frame = U.frame_components(s).dot(G * V.frame_components(s));
    const double direct = U.U(s).dot(metric_at(bg, st.x, Tau(s * s)) * V.U(s));
    CHECK(std::abs(via_frame - direct) < 1e-9 * (1.0 + std::abs(direct)));
  }
}

TEST_CASE("conjugate scan: empty cases") {
  std::mt19937_64 rng(25);
  const ConjugateReport flat = conjugate_scan(shoot(FlowBackground::euclidean(2), origin(2), randn(2, rng), Tau(9.0)));
  CHECK(flat.points.empty());
  CHECK(flat.total_multiplicity == 0);
  const ConjugateReport sph = conjugate_scan(shoot(FlowBackground::sphere(2, 1.0), origin(2), Vec::Zero(2), Tau(16.0)));
  CHECK(sph.points.empty());
  CHECK_FALSE(sph.endpoint_conjugate);
}

TEST_CASE("conjugate scan: fast sphere geodesic against the closed form") {
  const FlowBackground bg = FlowBackground::sphere(2, kC0);
  const LGeodesicPath p10 = shoot(bg, origin(2), fast_v(), Tau(1.0), 1e-10);
  const LGeodesicPath p12 = shoot(bg, origin(2), fast_v(), Tau(1.0), 1e-12);
  const ConjugateReport a = conjugate_scan(p10, 1e-10);
  const ConjugateReport b = conjugate_scan(p12, 1e-12);
  const int expect = closed::conjugate_count(kC0, 2, fast_vg(), 1.0);
  CHECK(expect == 4);
  REQUIRE(a.points.size() == static_cast<std::size_t>(expect));
  REQUIRE(b.points.size() == a.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(std::abs(a.points[i].s - b.points[i].s) < 1e-8);
    CHECK(std::abs(a.points[i].s - closed::conjugate_s(kC0, 2, fast_vg(), static_cast<int>(i) + 1)) < 1e-8);
    CHECK(a.points[i].multiplicity == 1);
    CHECK(a.points[i].tau == doctest::Approx(a.points[i].s * a.points[i].s));
    CHECK(a.points[i].tau > 0.0);
    CHECK(a.points[i].tau < 1.0);
    if (i > 0) CHECK(a.points[i].tau > a.points[i - 1].tau);
  }
}

TEST_CASE("conjugate scan: multiplicity two on the 3-sphere") {
  // det J has a double root, so only the singular value dip finds it
  const FlowBackground bg = FlowBackground::sphere(3, kC0);
  Vec v(3);
  v << 30.0, 0.0, 0.0;
  const ConjugateReport r = conjugate_scan(shoot(bg, origin(3), v, Tau(0.25)));
  const int k = closed::conjugate_count(kC0, 3, fast_vg(), 0.5);
  REQUIRE(k >= 1);
  REQUIRE(r.points.size() == static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    CHECK(r.points[i].multiplicity == 2);
    CHECK(r.points[i].multiplicity <= 3);
    CHECK(std::abs(r.points[i].s - closed::conjugate_s(kC0, 3, fast_vg(), static_cast<int>(i) + 1)) < 1e-8);
  }
  CHECK(r.total_multiplicity == 2 * k);
}

TEST_CASE("kernel fields vanish at both ends") {
  const FlowBackground bg = FlowBackground::sphere(2, kC0);
  const LGeodesicPath path = shoot(bg, origin(2), fast_v(), Tau(1.0));
  const JacobiMatrix jm = jacobi_matrix(path);
  const ConjugateReport r = conjugate_scan(path);
  REQUIRE_FALSE(r.points.empty());
  for (const ConjugatePoint& cp : r.points) {
    REQUIRE(cp.kernel.cols() == cp.multiplicity);
    for (int c = 0; c < cp.kernel.cols(); ++c) {
      const JacobiSolution U = jm.combination(cp.kernel.col(c));
      double umax = 0.0;
      for (int i = 0; i <= 200; ++i) {
        const double s = cp.s * i / 200.0;
        umax = std::max(umax, g_norm(bg, U.state(s), U.U(s)));
      }
      CHECK(U.U(0.0).norm() == 0.0);
      CHECK(g_norm(bg, U.state(cp.s), U.U(cp.s)) < 1e-7 * umax);
    }
    CHECK(sigma_ratio(dlexp(bg, origin(2), fast_v(), Tau(cp.tau))) < 1e-6);
  }
}

TEST_CASE("endpoint exactly conjugate is flagged, not reported") {
  const FlowBackground bg = FlowBackground::sphere(2, kC0);
  const double s1 = closed::conjugate_s(kC0, 2, fast_vg(), 1);
  const ConjugateReport r = conjugate_scan(shoot(bg, origin(2), fast_v(), Tau(s1 * s1)));
  CHECK(r.points.empty());
  CHECK(r.endpoint_conjugate);
  const nlohmann::json j = to_json(r);
  CHECK(j.at("points").is_array());
  CHECK(j.at("endpoint_conjugate").get<bool>());
}

TEST_CASE("conjugate report json") {
  const ConjugateReport r = conjugate_scan(shoot(FlowBackground::sphere(2, kC0), origin(2), fast_v(), Tau(1.0)));
  const nlohmann::json j = to_json(r);
  REQUIRE(j.at("points").size() == r.points.size());
  CHECK(j.at("points")[0].at("tau").get<double>() == r.points[0].tau);
  CHECK(j.at("points")[0].at("multiplicity").get<int>() == 1);
  CHECK_FALSE(j.at("endpoint_conjugate").get<bool>());
}

TEST_CASE("close roots demand a finer separation") {
  Vec v(2);
  v << 5000.0, 0.0;  // conjugate points crowd together near s = 0
  const LGeodesicPath path = shoot(FlowBackground::sphere(2, kC0), origin(2), v, Tau(0.01));
  bool raised = false;
  try {
    conjugate_scan(path, 1e-10, 1e-2);
  } catch (const Error& e) {
    raised = e.kind() == ErrorKind::UnresolvedCluster;
  }
  CHECK(raised);
}

TEST_CASE("dL exp closed forms") {
  const FlowBackground e = FlowBackground::euclidean(2);
  CHECK((dlexp(e, origin(2), Vec::Ones(2), Tau(1.0)) - 2.0 * Mat::Identity(2, 2)).norm() < 1e-12);
  CHECK((dlexp(e, origin(2), Vec::Ones(2), Tau(4.0)) - 4.0 * Mat::Identity(2, 2)).norm() < 1e-12);
  const Mat D = dlexp(FlowBackground::sphere(2, 1.0), origin(2), Vec::Zero(2), Tau(1.0));
  CHECK((D - 2.0 * closed::sigma(1.0, 2, 1.0) * Mat::Identity(2, 2)).norm() < 1e-9);
}

TEST_CASE("dL exp agrees with finite differences of lexp") {
  std::mt19937_64 rng(26);
  for (const FlowBackground& bg : {FlowBackground::sphere(2, 1.0), FlowBackground::cylinder(3, 0.5),
                                    FlowBackground::sphere(3, 0.3)}) {
    const int n = bg.dim();
    for (int t = 0; t < 3; ++t) {
      const Vec v = 0.4 * randn(n, rng);
      const Mat D = dlexp(bg, origin(n), v, Tau(1.0), 1e-12);
      const int chart = lexp(bg, origin(n), v, Tau(1.0), 1e-12).chart_id;
      Mat fd(n, n);
      const double h = 1e-5;
      for (int a = 0; a < n; ++a) {
        const Vec dv = h * Vec::Unit(n, a);
        const Vec xp = to_chart(bg, lexp(bg, origin(n), v + dv, Tau(1.0), 1e-12), chart).point.coords;
        const Vec xm = to_chart(bg, lexp(bg, origin(n), v - dv, Tau(1.0), 1e-12), chart).point.coords;
        fd.col(a) = (xp - xm) / (2 * h);
      }
      CHECK((D - fd).norm() < 1e-6 * D.norm());
    }
  }
}

TEST_CASE("Jacobi boundary value problem") {
  Vec e1(2);
  e1 << 1.0, 0.0;
  const LGeodesicPath flat = shoot(FlowBackground::euclidean(2), origin(2), Vec::Ones(2), Tau(1.0));
  const JacobiSolution U = jacobi_bvp(flat, e1);
  for (double s : {0.0, 0.3, 1.0}) CHECK((U.U(s) - s * e1).norm() < 1e-12);
  CHECK(jacobi_bvp(flat, Vec::Zero(2)).U(0.5).norm() == 0.0);

  const LGeodesicPath sph = shoot(FlowBackground::sphere(2, 1.0), origin(2), Vec::Zero(2), Tau(1.0));
  const JacobiSolution V = jacobi_bvp(sph, e1);
  for (double s : {0.25, 0.5, 1.0})
    CHECK((V.U(s) - closed::sigma(1.0, 2, s) / closed::sigma(1.0, 2, 1.0) * e1).norm() < 1e-9);

  const double s1 = closed::conjugate_s(kC0, 2, fast_vg(), 1);
  const LGeodesicPath conj = shoot(FlowBackground::sphere(2, kC0), origin(2), fast_v(), Tau(s1 * s1));
  CHECK_THROWS_AS(jacobi_bvp(conj, e1), Error);

  // a sub-interval ending before the first conjugate point is fine
  const JacobiMatrix jm = jacobi_matrix(shoot(FlowBackground::sphere(2, kC0), origin(2), fast_v(), Tau(1.0)));
  const JacobiSolution W = jacobi_bvp_frame(jm, 0.5 * s1, e1);
  CHECK((W.frame_components(0.5 * s1) - e1).norm() < 1e-10);
  CHECK_THROWS_AS(jacobi_bvp_frame(jm, s1, e1), Error);
}

TEST_CASE("variation field check") {
  std::mt19937_64 rng(27);
  const Vec v = randn(2, rng), dv = randn(2, rng);
  CHECK(variation_field_check(FlowBackground::euclidean(2), origin(2), v, dv, Tau(1.0), 1e-4) < 1e-8);
  CHECK(variation_field_check(FlowBackground::sphere(2, 1.0), origin(2), v, Vec::Zero(2), Tau(1.0), 1e-4) == 0.0);
  Vec e1(2);
  e1 << 1.0, 0.0;
  const double d3 = variation_field_check(FlowBackground::sphere(2, 1.0), origin(2), v, e1, Tau(1.0), 1e-3);
  const double d4 = variation_field_check(FlowBackground::sphere(2, 1.0), origin(2), v, e1, Tau(1.0), 1e-4);
  CHECK(d3 / d4 > 10.0 / 1.5);
  CHECK(d3 / d4 < 10.0 * 1.5);
}
