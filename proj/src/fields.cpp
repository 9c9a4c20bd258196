#include "lgeom/fields.hpp"

#include <algorithm>
#include <cmath>

namespace lgeom {

FieldAlong::FieldAlong(int n, Callback f, std::vector<double> breakpoints, bool smooth_jacobi)
    : n_(n), f_(std::move(f)), breaks_(std::move(breakpoints)), jacobi_(smooth_jacobi) {
  std::sort(breaks_.begin(), breaks_.end());
  breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
}

FieldAlong FieldAlong::analytic(int n, Callback f, std::vector<double> breakpoints) {
  return FieldAlong(n, std::move(f), std::move(breakpoints));
}

FieldAlong FieldAlong::mesh(std::vector<double> nodes, std::vector<Vec> values) {
  if (nodes.size() < 2 || nodes.size() != values.size())
    throw Error(ErrorKind::InvalidArgument, "mesh field needs matching nodes and values (>= 2)");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw Error(ErrorKind::InvalidArgument, "mesh nodes must increase");
  const int n = static_cast<int>(values.front().size());
  auto f = [nodes, values, n](double s, Side side) {
    const std::size_t last = nodes.size() - 2;
    std::size_t k;
    if (side == Side::Right) {
      auto it = std::upper_bound(nodes.begin(), nodes.end(), s);
      k = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
    } else {
      auto it = std::lower_bound(nodes.begin(), nodes.end(), s);
      k = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
    }
    k = std::min(k, last);
    const double h = nodes[k + 1] - nodes[k];
    const double t = (s - nodes[k]) / h;
    FieldValue fv;
    fv.u = (1.0 - t) * values[k] + t * values[k + 1];
    fv.du = (values[k + 1] - values[k]) / h;
    fv.ddu = Vec::Zero(n);
    return fv;
  };
  return FieldAlong(n, f, std::move(nodes));
}

FieldAlong FieldAlong::from_jacobi(const JacobiSolution& js) {
  const int n = js.path().dim();
  const FlowBackground bg = js.path().background();
  auto f = [js, bg](double s, Side) {
    const FlowState st = js.state(s);
    const Vec& c = js.coefficients();
    const FrameCoefficients fc = frame_coefficients(bg, st);
    FieldValue fv;
    fv.u = st.U * c;
    fv.du = st.DU * c;
    fv.ddu = fc.jacobi_potential * fv.u + fc.jacobi_damping * fv.du;
    return fv;
  };
  std::vector<double> br;
  for (const FlowStep& step : js.trajectory().steps()) br.push_back(step.s1);
  if (!br.empty()) br.pop_back();
  return FieldAlong(n, f, std::move(br), true);
}

FieldAlong FieldAlong::zero(int n) {
  return FieldAlong(n, [n](double, Side) { return FieldValue{Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)}; });
}

FieldAlong FieldAlong::profile(const Vec& direction, std::function<double(double)> phi,
                               std::function<double(double)> dphi, std::function<double(double)> ddphi) {
  const int n = static_cast<int>(direction.size());
  return FieldAlong(n, [direction, phi, dphi, ddphi](double s, Side) {
    return FieldValue{phi(s) * direction, dphi(s) * direction, ddphi(s) * direction};
  });
}

FieldAlong FieldAlong::combine(double a, const FieldAlong& U, double b, const FieldAlong& V) {
  if (U.dim() != V.dim()) throw Error(ErrorKind::InvalidArgument, "field dimensions differ");
  std::vector<double> br = U.breakpoints();
  br.insert(br.end(), V.breakpoints().begin(), V.breakpoints().end());
  auto f = [a, b, U, V](double s, Side side) {
    const FieldValue x = U.eval(s, side);
    const FieldValue y = V.eval(s, side);
    return FieldValue{a * x.u + b * y.u, a * x.du + b * y.du, a * x.ddu + b * y.ddu};
  };
  return FieldAlong(U.dim(), f, std::move(br), U.is_jacobi() && V.is_jacobi());
}

TangentVec field_coords(const LGeodesicPath& path, const FieldAlong& U, double s) {
  return path.at(s).E * U.u(s);
}

FieldAlong random_sine_field(int n, std::mt19937_64& rng, int modes, double s_end, double amplitude) {
  std::normal_distribution<double> N(0.0, amplitude);
  Mat a(n, modes);
  for (int k = 0; k < modes; ++k)
    for (int i = 0; i < n; ++i) a(i, k) = N(rng);
  auto f = [a, n, modes, s_end](double s, Side side) {
    FieldValue fv{Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)};
    if (s > s_end || (s == s_end && side == Side::Right)) return fv;
    for (int k = 1; k <= modes; ++k) {
      const double w = k * M_PI / s_end;
      fv.u += std::sin(w * s) * a.col(k - 1);
      fv.du += w * std::cos(w * s) * a.col(k - 1);
      fv.ddu -= w * w * std::sin(w * s) * a.col(k - 1);
    }
    return fv;
  };
  return FieldAlong(n, f, {s_end});
}

FieldAlong random_polynomial_field(int n, std::mt19937_64& rng, int degree, bool vanish_at_zero) {
  std::normal_distribution<double> N(0.0, 1.0);
  Mat c(n, degree + 1);
  for (int d = 0; d <= degree; ++d)
    for (int i = 0; i < n; ++i) c(i, d) = (d == 0 && vanish_at_zero) ? 0.0 : N(rng);
  auto f = [c, n, degree](double s, Side) {
    FieldValue fv{Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)};
    for (int d = 0; d <= degree; ++d) {
      fv.u += std::pow(s, d) * c.col(d);
      if (d >= 1) fv.du += d * std::pow(s, d - 1) * c.col(d);
      if (d >= 2) fv.ddu += d * (d - 1) * std::pow(s, d - 2) * c.col(d);
    }
    return fv;
  };
  return FieldAlong(n, f);
}

}  // namespace lgeom
