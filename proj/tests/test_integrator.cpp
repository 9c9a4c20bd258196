#include <doctest.h>

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>

#include "closed_forms.hpp"
#include "lgeom/errors.hpp"
#include "lgeom/integrator.hpp"
#include "lgeom/lgeo.hpp"

using namespace lgeom;

namespace {

Dopri5 oscillator(double tol) {
  IntegratorOptions o;
  o.rtol = o.atol = tol;
  return Dopri5(
      [](double, const Vec& y, Vec& dy) {
        dy.resize(2);
        dy << y(1), -y(0);
      },
      o);
}

// s-form geodesic on Sphere(n, c0) in the stereographic chart, written out from
// the conformal factor: Gamma^k_ij = d_ki dphi_j + d_kj dphi_i - d_ij dphi_k,
// dphi = -2y / (1 + |y|^2), and Ric = (n - 1) / c g.
struct SphereGeodesic {
  int n;
  double c0;
  void operator()(const std::vector<double>& y, std::vector<double>& dy, double s) const {
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) r2 += y[i] * y[i];
    double zdphi = 0.0, zz = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dphi = -2.0 * y[i] / (1.0 + r2);
      zdphi += y[n + i] * dphi;
      zz += y[n + i] * y[n + i];
    }
    const double ric = (n - 1) / closed::scale(c0, n, s * s);
    for (int k = 0; k < n; ++k) {
      const double dphi_k = -2.0 * y[k] / (1.0 + r2);
      const double gamma = 2.0 * y[n + k] * zdphi - zz * dphi_k;
      dy[k] = y[n + k];
      dy[n + k] = -gamma - 4.0 * s * ric * y[n + k];
    }
  }
};

}  // namespace

TEST_CASE("dopri5 reproduces the harmonic oscillator") {
  Dopri5 rk = oscillator(1e-12);
  Vec y0(2);
  y0 << 1.0, 0.0;
  rk.reset(0.0, y0);
  double prev_end = 0.0;
  Vec prev_y = y0;
  while (rk.t() < 10.0) {
    const DenseStep& d = rk.step(10.0);
    CHECK(d.t0 == prev_end);
    CHECK((d(d.t0) - prev_y).norm() < 1e-15);
    const double tm = d.t0 + 0.37 * d.h;
    CHECK(std::abs(d(tm)(0) - std::cos(tm)) < 1e-9);
    prev_end = d.t1();
    prev_y = rk.y();
  }
  CHECK(rk.t() == 10.0);
  CHECK(std::abs(rk.y()(0) - std::cos(10.0)) < 1e-10);
  CHECK(std::abs(rk.y()(1) + std::sin(10.0)) < 1e-10);
  CHECK(rk.stats().max_error_ratio <= 1.0);
}

TEST_CASE("dopri5 error scales with tolerance") {
  Vec y0(2);
  y0 << 1.0, 0.0;
  double errs[2];
  int i = 0;
  for (double tol : {1e-6, 1e-9}) {
    Dopri5 rk = oscillator(tol);
    rk.reset(0.0, y0);
    while (rk.t() < 5.0) rk.step(5.0);
    errs[i++] = std::abs(rk.y()(0) - std::cos(5.0));
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[1] < 1e-8);
}

TEST_CASE("dopri5 reaches awkward end points exactly") {
  // many short legs whose ends are not representable sums of the step sizes
  Dopri5 rk = oscillator(1e-10);
  Vec y0(2);
  y0 << 0.0, 1.0;
  rk.reset(0.0, y0);
  for (int k = 1; k <= 200; ++k) {
    const double t_end = 0.0561027 * k / 7.0;
    while (rk.t() < t_end) rk.step(t_end);
    CHECK(rk.t() == t_end);
  }
  CHECK(std::abs(rk.y()(0) - std::sin(rk.t())) < 1e-9);
}

TEST_CASE("dopri5 rejects a target behind the current time") {
  Dopri5 rk = oscillator(1e-8);
  rk.reset(1.0, Vec::Ones(2));
  CHECK_THROWS_AS(rk.step(0.5), Error);
}

TEST_CASE("geodesic agrees with an independent order 7/8 integration") {
  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  const double c0 = 1.0;
  const FlowBackground bg = FlowBackground::sphere(2, c0);
  for (double lambda : {0.3, 0.7}) {
    for (double angle : {0.0, 1.1}) {
      Vec v(2);
      v << lambda * std::cos(angle), lambda * std::sin(angle);
      const LGeodesicPath path = shoot(bg, ChartPoint{Vec::Zero(2), 0}, v, Tau(1.0));
      const Vec end = to_chart(bg, path.endpoint(), 0).point.coords;

      State y{0.0, 0.0, 2.0 * v(0), 2.0 * v(1)};
      auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_fehlberg78<State>());
      ode::integrate_adaptive(stepper, SphereGeodesic{2, c0}, y, 0.0, 1.0, 1e-3);
      CHECK(std::hypot(end(0) - y[0], end(1) - y[1]) < 1e-8);
    }
  }
}

TEST_CASE("fast geodesic covers the closed-form angle") {
  // |Z|_g decays like sqrt(c0 / c), so the round angle travelled is |Z(0)|_g sigma(s) / sqrt(c0)
  const double c0 = 1.0;
  const FlowBackground bg = FlowBackground::sphere(2, c0);
  Vec v(2);
  v << 0.2, 0.0;  // angle 0.8 sigma(1) < pi, so the endpoint is on the positive axis
  const LGeodesicPath path = shoot(bg, ChartPoint{Vec::Zero(2), 0}, v, Tau(1.0));
  const double theta = 4.0 * std::sqrt(c0) * v.norm() * closed::sigma(c0, 2, 1.0) / std::sqrt(c0);
  const Vec end = to_chart(bg, path.endpoint(), 0).point.coords;
  CHECK(std::abs(end(0) - std::tan(theta / 2.0)) < 1e-9);
  CHECK(std::abs(end(1)) < 1e-12);

  Vec fast(2);
  fast << 5.0, 0.0;  // many turns around the sphere, several chart switches
  const LGeodesicPath p2 = shoot(bg, ChartPoint{Vec::Zero(2), 0}, fast, Tau(1.0));
  const double th2 = 4.0 * std::sqrt(c0) * fast.norm() * closed::sigma(c0, 2, 1.0) / std::sqrt(c0);
  const ChartPoint e2 = p2.endpoint();
  // position on the great circle through the x-axis: compare via the chart origin angle
  const Vec y = to_chart(bg, e2, 0).point.coords;
  const double phase = 2.0 * std::atan2(y(0), 1.0);
  const double expect = std::remainder(th2, 2.0 * M_PI);
  CHECK(std::abs(std::remainder(phase - expect, 2.0 * M_PI)) < 1e-8);
}
