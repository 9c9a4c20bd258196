#include "lgeom/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace lgeom {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

}  // namespace

Vec DenseStep::operator()(double t) const {
  const double theta = h == 0.0 ? 0.0 : (t - t0) / h;
  const double theta1 = 1.0 - theta;
  return r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
}

Dopri5::Dopri5(Rhs rhs, IntegratorOptions opts) : rhs_(std::move(rhs)), opts_(opts) {}

void Dopri5::reset(double t, const Vec& y) {
  t_ = t;
  y_ = y;
  k1_.resize(y.size());
  rhs_(t_, y_, k1_);
  ++stats_.rhs_evals;
}

double Dopri5::error_norm(const Vec& err, const Vec& y0, const Vec& y1) const {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

double Dopri5::initial_step(double t_end) {
  const double span = std::abs(t_end - t_);
  Vec zero = Vec::Zero(y_.size());
  const double d0 = error_norm(y_, y_, zero);
  const double d1n = error_norm(k1_, y_, zero);
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min({h0, span, opts_.h_max});
  Vec y1 = y_ + h0 * k1_;
  Vec f1(y_.size());
  rhs_(t_ + h0, y1, f1);
  ++stats_.rhs_evals;
  const double d2 = error_norm(f1 - k1_, y_, zero) / h0;
  const double dm = std::max(d1n, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
  return std::min({100.0 * h0, h1, span, opts_.h_max});
}

const DenseStep& Dopri5::step(double t_end) {
  const double span = t_end - t_;
  if (span <= 0.0) throw Error(ErrorKind::InvalidArgument, "integration target not ahead of current time");
  if (h_ <= 0.0) h_ = initial_step(t_end);

  const Eigen::Index N = y_.size();
  Vec k2(N), k3(N), k4(N), k5(N), k6(N), k7(N), ytmp(N), y1(N), err(N);
  const double h_floor = 1e-14 * std::max(1.0, std::abs(t_));
  bool last_rejected = false;

  for (;;) {
    if (stats_.accepted + stats_.rejected > opts_.max_steps)
      throw Error(ErrorKind::ToleranceNotMet, "step budget exhausted");
    double h = std::min({h_, opts_.h_max, span});
    // absorb a remainder too small to step on its own
    if (span - h < h_floor) h = span;
    if (h < h_floor && h < span) throw Error(ErrorKind::ToleranceNotMet, "step size underflow");
    const double t = t_;
    bool ok = true;
    try {
      ytmp = y_ + h * a21 * k1_;
      rhs_(t + c2 * h, ytmp, k2);
      ytmp = y_ + h * (a31 * k1_ + a32 * k2);
      rhs_(t + c3 * h, ytmp, k3);
      ytmp = y_ + h * (a41 * k1_ + a42 * k2 + a43 * k3);
      rhs_(t + c4 * h, ytmp, k4);
      ytmp = y_ + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4);
      rhs_(t + c5 * h, ytmp, k5);
      ytmp = y_ + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs_(t + h, ytmp, k6);
      y1 = y_ + h * (a71 * k1_ + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      rhs_(t + h, y1, k7);
      stats_.rhs_evals += 6;
    } catch (const Error& e) {
      // A stage left the chart domain: retry with a smaller step.
      if (e.kind() != ErrorKind::InvalidChart) throw;
      ok = false;
    }
    double en = 0.0;
    if (ok) {
      err = h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      en = error_norm(err, y_, y1);
      if (!std::isfinite(en)) ok = false;
    }
    if (!ok) {
      ++stats_.rejected;
      h_ = 0.25 * h;
      last_rejected = true;
      continue;
    }
    if (en > 1.0) {
      ++stats_.rejected;
      h_ = h * std::max(0.2, 0.9 * std::pow(en, -0.2));
      last_rejected = true;
      continue;
    }

    dense_.t0 = t;
    dense_.h = h;
    dense_.r1 = y_;
    dense_.r2 = y1 - y_;
    dense_.r3 = h * k1_ - dense_.r2;
    dense_.r4 = dense_.r2 - h * k7 - dense_.r3;
    dense_.r5 = h * (d1 * k1_ + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

    ++stats_.accepted;
    stats_.max_error_ratio = std::max(stats_.max_error_ratio, en);
    double fac = en == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(en, -0.2));
    if (last_rejected) fac = std::min(fac, 1.0);
    h_ = h * std::max(0.2, fac);
    t_ = (h == span) ? t_end : t + h;
    y_ = y1;
    k1_ = k7;
    return dense_;
  }
}

}  // namespace lgeom
