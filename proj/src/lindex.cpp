#include "lgeom/lindex.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace lgeom {

namespace {

using boost::math::quadrature::gauss_kronrod;

std::pair<double, double> interval(const LGeodesicPath& path, const IndexFormOptions& opts) {
  const double a = opts.s_begin.value_or(0.0);
  const double b = opts.s_end.value_or(path.s_max());
  if (!(a >= 0.0) || !(b <= path.s_max() * (1.0 + 1e-14)) || !(a < b))
    throw Error(ErrorKind::InvalidArgument, "index form interval must satisfy 0 <= s_begin < s_end <= s_max");
  return {a, std::min(b, path.s_max())};
}

void add_inside(std::vector<double>& pts, const std::vector<double>& br, double a, double b) {
  for (double x : br)
    if (x > a && x < b) pts.push_back(x);
}

std::vector<double> split_points(const LGeodesicPath& path, double a, double b,
                                 std::initializer_list<const FieldAlong*> fields) {
  std::vector<double> pts{a, b};
  for (const FlowStep& st : path.trajectory().steps())
    if (st.s1 > a && st.s1 < b) pts.push_back(st.s1);
  for (const FieldAlong* f : fields) add_inside(pts, f->breakpoints(), a, b);
  std::sort(pts.begin(), pts.end());
  const double tiny = 1e-13 * std::max(1.0, b);
  std::vector<double> out;
  for (double x : pts)
    if (out.empty() || x - out.back() > tiny) out.push_back(x);
  out.back() = b;
  return out;
}

std::string sci(double x) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << x;
  return os.str();
}

struct Quad {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

template <class F>
Quad integrate_pieces(F f, const std::vector<double>& pts, double rel_tol, double abs_floor = 0.0) {
  Quad q;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double err = 0.0, l1 = 0.0;
    q.value += gauss_kronrod<double, 15>::integrate(f, pts[i], pts[i + 1], 6, 1e-2 * rel_tol, &err, &l1);
    q.error += err;
    q.l1 += l1;
  }
  if (q.error > rel_tol * q.l1 + abs_floor)
    throw Error(ErrorKind::QuadratureFailure,
                "quadrature error " + sci(q.error) + " exceeds tolerance (l1 " + sci(q.l1) + ")");
  return q;
}

Mat gram_at(const LGeodesicPath& path, const FlowState& st) {
  return st.E.transpose() * metric_at(path.background(), st.x, Tau(st.s * st.s)) * st.E;
}

}  // namespace

IndexFormValue index_form_detail(const LGeodesicPath& path, const FieldAlong& U, const FieldAlong& V,
                                 const IndexFormOptions& opts) {
  if (U.dim() != path.dim() || V.dim() != path.dim())
    throw Error(ErrorKind::InvalidArgument, "field dimension does not match the path");
  const auto [a, b] = interval(path, opts);
  const std::vector<double> pts = split_points(path, a, b, {&U, &V});
  const FlowBackground& bg = path.background();
  auto parts = [&](double s) {
    const FlowState st = path.at(s);
    const FrameCoefficients fc = frame_coefficients(bg, st, opts.flip_curvature_sign);
    const FieldValue u = U.eval(s);
    const FieldValue v = V.eval(s);
    return std::pair<double, double>(u.du.dot(fc.gram * v.du), u.u.dot(fc.index_potential * v.u));
  };
  const Quad q = integrate_pieces(
      [&](double s) {
        const auto p = parts(s);
        return p.first + p.second;
      },
      pts, opts.rel_tol);
  IndexFormValue out{q.value, q.error, q.l1, 0.0};
  if (opts.compute_scale) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      out.scale += gauss_kronrod<double, 15>::integrate(
          [&](double s) {
            const auto p = parts(s);
            return std::abs(p.first) + std::abs(p.second);
          },
          pts[i], pts[i + 1], 0);
  }
  return out;
}

double index_form(const LGeodesicPath& path, const FieldAlong& U, const FieldAlong& V,
                  const IndexFormOptions& opts) {
  return index_form_detail(path, U, V, opts).value;
}

KeyLemmaTerms key_lemma_terms(const LGeodesicPath& path, const FieldAlong& U, const FieldAlong& V,
                              const IndexFormOptions& opts) {
  const auto [a, b] = interval(path, opts);
  KeyLemmaTerms t;
  const IndexFormValue iv = index_form_detail(path, U, V, opts);
  t.index = iv.value;

  // boundary: sum over the smooth pieces of U of <D_s U, V> at both ends
  std::vector<double> br{a, b};
  add_inside(br, U.breakpoints(), a, b);
  std::sort(br.begin(), br.end());
  auto pair_at = [&](double s, Side side) {
    const FlowState st = path.at(s);
    const FieldValue u = U.eval(s, side);
    const FieldValue v = V.eval(s, side);
    return u.du.dot(gram_at(path, st) * v.u);
  };
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    if (br[i + 1] <= br[i]) continue;
    t.boundary += pair_at(br[i + 1], Side::Left) - pair_at(br[i], Side::Right);
  }

  const FlowBackground& bg = path.background();
  const std::vector<double> pts = split_points(path, a, b, {&U, &V});
  const Quad q = integrate_pieces(
      [&](double s) {
        const FlowState st = path.at(s);
        const FrameCoefficients fc = frame_coefficients(bg, st);
        const FieldValue u = U.eval(s);
        const Vec ju = u.ddu - fc.jacobi_potential * u.u - fc.jacobi_damping * u.du;
        return ju.dot(fc.gram * V.u(s));
      },
      // for a Jacobi field the integrand is rounding noise; judge it on the index form's scale
      pts, opts.rel_tol, opts.rel_tol * iv.l1);
  t.operator_integral = q.value;
  t.residual = std::abs(t.index - t.boundary + t.operator_integral);
  return t;
}

double key_lemma_residual(const LGeodesicPath& path, const FieldAlong& U, const FieldAlong& V,
                          const IndexFormOptions& opts) {
  return key_lemma_terms(path, U, V, opts).residual;
}

SecondVariation second_variation_check(const LGeodesicPath& path, const FieldAlong& Y, std::array<double, 2> eps,
                                       const VariationOptions& vopts) {
  if (Y.u(0.0).norm() > 1e-14) throw Error(ErrorKind::InvalidArgument, "Y must vanish at s = 0");
  SecondVariation sv;
  sv.lhs = index_form(path, Y, Y);
  sv.second_difference = fd_second_variation(path.background(), path, Y, eps, vopts);
  if (vopts.mode == Displacement::CoordinateLinear) {
    // nabla_Y Y = Gamma(Y, Y) for a chart-linear family; first variation is <Z, .> at s_max
    const double s = path.s_max();
    const FlowState st = path.at(s);
    const TensorPack tp = tensors_at(path.background(), st.x, Tau(s * s));
    const Vec y = st.E * Y.u(s, Side::Left);
    sv.first_variation_term = st.Z.dot(tp.g * tp.christoffel_contract(y, y));
  }
  sv.rhs = sv.second_difference - sv.first_variation_term;
  return sv;
}

// ---------------------------------------------------------------------------

IndexMatrix assemble(const LGeodesicPath& path, int m, std::optional<double> s_end, bool flip_curvature_sign) {
  if (m < 4) throw Error(ErrorKind::InvalidArgument, "mesh needs at least 4 elements");
  const double L = s_end.value_or(path.s_max());
  if (!(L > 0.0) || L > path.s_max() * (1.0 + 1e-14))
    throw Error(ErrorKind::InvalidArgument, "assembly interval outside the path");
  const int n = path.dim();
  const int N = n * (m - 1);
  IndexMatrix im;
  im.n = n;
  im.m = m;
  im.s_end = std::min(L, path.s_max());
  im.A = Mat::Zero(N, N);
  im.M = Mat::Zero(N, N);
  const double h = im.s_end / m;
  for (int k = 0; k <= m; ++k) im.mesh.push_back(k == m ? im.s_end : k * h);

  using GL = boost::math::quadrature::gauss<double, 4>;
  std::vector<double> xs, ws;
  for (std::size_t i = 0; i < GL::abscissa().size(); ++i) {
    xs.push_back(GL::abscissa()[i]);
    ws.push_back(GL::weights()[i]);
    if (GL::abscissa()[i] != 0.0) {
      xs.push_back(-GL::abscissa()[i]);
      ws.push_back(GL::weights()[i]);
    }
  }
  const FlowBackground& bg = path.background();
  for (int e = 0; e < m; ++e) {
    const double s0 = im.mesh[e], s1 = im.mesh[e + 1];
    const double he = s1 - s0;
    Mat K = Mat::Zero(2 * n, 2 * n), Ms = Mat::Zero(2 * n, 2 * n);
    for (std::size_t q = 0; q < xs.size(); ++q) {
      const double s = s0 + 0.5 * he * (1.0 + xs[q]);
      const double w = 0.5 * he * ws[q];
      const FrameCoefficients fc = frame_coefficients(bg, path.at(s), flip_curvature_sign);
      const double phi[2] = {(s1 - s) / he, (s - s0) / he};
      const double dphi[2] = {-1.0 / he, 1.0 / he};
      for (int p = 0; p < 2; ++p)
        for (int r = 0; r < 2; ++r) {
          K.block(p * n, r * n, n, n) += w * (dphi[p] * dphi[r] * fc.gram + phi[p] * phi[r] * fc.index_potential);
          Ms.block(p * n, r * n, n, n) += w * phi[p] * phi[r] * fc.gram;
        }
    }
    const int nodes[2] = {e, e + 1};
    for (int p = 0; p < 2; ++p) {
      if (nodes[p] == 0 || nodes[p] == m) continue;
      for (int r = 0; r < 2; ++r) {
        if (nodes[r] == 0 || nodes[r] == m) continue;
        im.A.block((nodes[p] - 1) * n, (nodes[r] - 1) * n, n, n) += K.block(p * n, r * n, n, n);
        im.M.block((nodes[p] - 1) * n, (nodes[r] - 1) * n, n, n) += Ms.block(p * n, r * n, n, n);
      }
    }
  }
  im.A = 0.5 * (im.A + im.A.transpose()).eval();
  im.M = 0.5 * (im.M + im.M.transpose()).eval();
  for (double s : im.mesh) im.frame_gram.push_back(gram_at(path, path.at(s)));
  return im;
}

IndexSpectrum index_spectrum(const IndexMatrix& im, double zero_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(im.A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::EigensolverFailure, "symmetric eigensolver failed");
  const Vec& ev = es.eigenvalues();
  IndexSpectrum sp;
  sp.norm = ev.cwiseAbs().maxCoeff();
  for (int i = 0; i < ev.size(); ++i) {
    sp.eigenvalues.push_back(ev(i));
    if (ev(i) < -zero_tol * sp.norm) ++sp.index;
    if (std::abs(ev(i)) < 10.0 * zero_tol * sp.norm) sp.near_zero.push_back(ev(i));
  }
  return sp;
}

int morse_index(const LGeodesicPath& path, int m, double zero_tol) {
  return index_spectrum(assemble(path, m), zero_tol).index;
}

double min_generalized_eigenvalue(const IndexMatrix& im) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(im.A, im.M, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::EigensolverFailure, "generalized eigensolver failed");
  return es.eigenvalues()(0);
}

MorseVerdict verify_morse(const LGeodesicPath& path, const std::vector<int>& meshes, const MorseOptions& opts) {
  if (meshes.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two meshes");
  for (std::size_t i = 1; i < meshes.size(); ++i)
    if (meshes[i] <= meshes[i - 1]) throw Error(ErrorKind::InvalidArgument, "meshes must increase");
  MorseVerdict v;
  ScanOptions so;
  so.tol = opts.tol;
  so.sep = opts.sep;
  v.conjugates = conjugate_scan(path, so);
  v.conjugate_sum = v.conjugates.total_multiplicity;
  v.endpoint_conjugate = v.conjugates.endpoint_conjugate;
  for (int m : meshes) {
    const IndexSpectrum sp = index_spectrum(assemble(path, m, std::nullopt, opts.flip_curvature_sign), opts.zero_tol);
    v.mesh_sizes_used.push_back(m);
    v.index_per_mesh.push_back(sp.index);
    v.near_zero_eigenvalues.insert(v.near_zero_eigenvalues.end(), sp.near_zero.begin(), sp.near_zero.end());
    double smallest = std::numeric_limits<double>::infinity();
    for (double ev : sp.eigenvalues) smallest = std::min(smallest, std::abs(ev) / sp.norm);
    v.smallest_relative.push_back(smallest);
  }
  const std::size_t k = v.index_per_mesh.size();
  v.discrete_index = v.index_per_mesh.back();
  v.stable = v.index_per_mesh[k - 1] == v.index_per_mesh[k - 2];
  v.agree = v.stable && v.discrete_index == v.conjugate_sum;
  return v;
}

// ---------------------------------------------------------------------------

const LemmaResult& LemmaReport::get(const std::string& name) const {
  for (const LemmaResult& r : results)
    if (r.name == name) return r;
  throw Error(ErrorKind::InvalidArgument, "no lemma named " + name);
}

namespace {

Vec random_vec(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vec x(n);
  for (int i = 0; i < n; ++i) x(i) = N(rng);
  return x;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

template <class F>
LemmaResult run_lemma(const std::string& name, F body) {
  LemmaResult r;
  r.name = name;
  try {
    body(r);
  } catch (const std::exception& e) {
    r.active = true;
    r.pass = false;
    r.detail = e.what();
  }
  return r;
}

}  // namespace

LemmaReport lemma_suite(const LGeodesicPath& path, const LemmaOptions& opts) {
  LemmaReport rep;
  const int n = path.dim();
  const double s_max = path.s_max();
  std::mt19937_64 rng(opts.seed);

  ScanOptions so;
  so.tol = opts.tol;
  const ConjugateReport cr = conjugate_scan(path, so);
  const JacobiMatrix jm = jacobi_matrix(path, opts.tol);
  const std::optional<double> first =
      cr.points.empty() ? std::nullopt : std::optional<double>(cr.points.front().s);
  double free_end = s_max;
  if (first) free_end = 0.5 * *first;
  else if (cr.endpoint_conjugate) free_end = 0.5 * s_max;

  // L1: kernel Jacobi fields at each conjugate point satisfy I(U,U) = 0 on [0, s*]
  rep.results.push_back(run_lemma("L1", [&](LemmaResult& r) {
    r.active = !cr.points.empty();
    r.bound = 1e-7;
    if (!r.active) {
      r.detail = "no interior conjugate points";
      return;
    }
    for (const ConjugatePoint& cp : cr.points) {
      const FieldAlong U = FieldAlong::from_jacobi(jm.combination(cp.kernel.col(0)));
      IndexFormOptions io;
      io.s_end = cp.s;
      io.compute_scale = true;
      const IndexFormValue iv = index_form_detail(path, U, U, io);
      const double rel = std::abs(iv.value) / iv.scale;
      r.value = std::max(r.value, rel);
      if (!(rel < r.bound)) r.pass = false;
    }
    r.detail = "max |I(U,U)| / scale over " + std::to_string(cr.points.size()) + " conjugate points";
  }));

  // L2: positive definite before the first conjugate point
  rep.results.push_back(run_lemma("L2", [&](LemmaResult& r) {
    r.active = true;
    const IndexSpectrum sp = index_spectrum(assemble(path, opts.mesh, free_end), opts.zero_tol);
    r.value = sp.eigenvalues.front() / sp.norm;
    r.bound = opts.zero_tol;
    r.pass = r.value > r.bound;
    r.detail = "min eigenvalue / norm on [0, " + fmt(free_end) + "]";
  }));

  // L3: semi-definite but not definite exactly at the first conjugate point
  rep.results.push_back(run_lemma("L3", [&](LemmaResult& r) {
    r.active = first.has_value();
    if (!r.active) {
      r.detail = "no interior conjugate points";
      return;
    }
    const double s1 = *first;
    const double l1 = min_generalized_eigenvalue(assemble(path, opts.mesh, s1));
    const double l2 = min_generalized_eigenvalue(assemble(path, 2 * opts.mesh, s1));
    const double ext = (4.0 * l2 - l1) / 3.0;
    r.value = ext;
    r.bound = opts.l3_rel_tol * (M_PI / s1) * (M_PI / s1);
    r.pass = std::abs(ext) < r.bound;
    r.detail = "lambda_min at meshes " + std::to_string(opts.mesh) + "/" + std::to_string(2 * opts.mesh) + ": " +
               fmt(l1) + ", " + fmt(l2) + "; extrapolated " + fmt(ext);
  }));

  // L4: past the first conjugate point some endpoint-vanishing field has I < 0
  rep.results.push_back(run_lemma("L4", [&](LemmaResult& r) {
    r.active = first.has_value() && s_max - *first > 1e-3 * s_max;
    if (!r.active) {
      r.detail = "path does not extend past a conjugate point";
      return;
    }
    const double s1 = *first;
    const double h = 0.1 * std::min(s1, s_max - s1);
    const double a = s1 - h, b = s1 + h;
    const JacobiSolution js = jm.combination(cr.points.front().kernel.col(0));
    const Vec ua = js.frame_components(a);
    auto f = [js, ua, a, b, n](double s, Side side) {
      FieldValue fv{Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)};
      if (s < a || (s == a && side == Side::Left)) {
        const FlowState st = js.state(s);
        fv.u = st.U * js.coefficients();
        fv.du = st.DU * js.coefficients();
      } else if (s < b || (s == b && side == Side::Left)) {
        fv.u = ua * (b - s) / (b - a);
        fv.du = -ua / (b - a);
      }
      return fv;
    };
    std::vector<double> br{a, b};
    for (const FlowStep& st : js.trajectory().steps())
      if (st.s1 < a) br.push_back(st.s1);
    const FieldAlong Y = FieldAlong::analytic(n, f, br);
    IndexFormOptions io;
    io.compute_scale = true;
    const IndexFormValue iv = index_form_detail(path, Y, Y, io);
    r.value = iv.value / iv.scale;
    r.bound = 0.0;
    r.pass = iv.value < 0.0 && iv.value < -10.0 * iv.error;
    r.detail = "I(Y,Y) / scale for the kernel field cut at the corner, width " + fmt(2 * h);
  }));

  // L5: I(U, Y) = 0 for Jacobi U and endpoint-vanishing Y
  rep.results.push_back(run_lemma("L5", [&](LemmaResult& r) {
    r.active = true;
    r.bound = 1e-7;
    for (int t = 0; t < opts.trials; ++t) {
      const FieldAlong U =
          FieldAlong::from_jacobi(jacobi_integrate_frame(path, random_vec(n, rng), random_vec(n, rng), opts.tol));
      const FieldAlong Y = random_sine_field(n, rng, 3, s_max);
      IndexFormOptions io;
      io.compute_scale = true;
      const IndexFormValue iv = index_form_detail(path, U, Y, io);
      const double rel = std::abs(iv.value) / iv.scale;
      r.value = std::max(r.value, rel);
      if (!(rel < r.bound)) r.pass = false;
    }
    r.detail = "max |I(U,Y)| / scale over " + std::to_string(opts.trials) + " trials";
  }));

  // L6: the Jacobi field minimizes I among fields with the same endpoints
  rep.results.push_back(run_lemma("L6", [&](LemmaResult& r) {
    r.active = true;
    const Vec w = random_vec(n, rng);
    const FieldAlong U = FieldAlong::from_jacobi(jacobi_bvp_frame(jm, free_end, w));
    IndexFormOptions io;
    io.s_end = free_end;
    io.compute_scale = true;
    const IndexFormValue iu = index_form_detail(path, U, U, io);
    io.compute_scale = false;
    const double slack = 1e-9 * iu.scale;
    r.bound = slack;
    double worst_gap = std::numeric_limits<double>::infinity();
    std::vector<double> amps{0.0, 1e-9};
    for (int t = 0; t < opts.trials; ++t) amps.push_back(std::pow(10.0, -t) * 0.5);
    for (double amp : amps) {
      const FieldAlong W = amp == 0.0 ? FieldAlong::zero(n) : random_sine_field(n, rng, 3, free_end, amp);
      const FieldAlong Y = FieldAlong::combine(1.0, U, 1.0, W);
      const double iy = index_form(path, Y, Y, io);
      double wmax = 0.0;
      for (int i = 0; i <= 200; ++i) wmax = std::max(wmax, W.u(free_end * i / 200.0).norm());
      const double gap = iy - iu.value;
      if (gap < -slack) r.pass = false;
      if (wmax >= 1e-7) {
        if (!(gap > slack)) r.pass = false;
        worst_gap = std::min(worst_gap, gap / iu.scale);
      }
    }
    r.value = worst_gap;
    r.detail = "min (I(Y,Y) - I(U,U)) / scale over strict competitors on [0, " + fmt(free_end) + "]";
  }));

  // L7: unique Jacobi field with U(0) = 0, U(s_max) = w
  rep.results.push_back(run_lemma("L7", [&](LemmaResult& r) {
    r.active = !cr.endpoint_conjugate;
    r.bound = 1e-8;
    if (!r.active) {
      r.detail = "endpoint is conjugate";
      return;
    }
    for (int t = 0; t < opts.trials; ++t) {
      const Vec w = random_vec(n, rng);
      const JacobiSolution U = jacobi_bvp_frame(jm, s_max, w);
      const double miss = (U.frame_components(s_max) - w).norm() / (1.0 + w.norm());
      const double start = U.frame_components(0.0).norm();
      r.value = std::max({r.value, miss, start});
    }
    r.pass = r.value < r.bound;
    r.detail = "max endpoint miss (relative) and |U(0)|";
  }));

  for (const LemmaResult& r : rep.results) rep.all_pass = rep.all_pass && r.pass;
  return rep;
}

nlohmann::json to_json(const MorseVerdict& v) {
  return {{"discrete_index", v.discrete_index},
          {"conjugate_sum", v.conjugate_sum},
          {"mesh_sizes_used", v.mesh_sizes_used},
          {"index_per_mesh", v.index_per_mesh},
          {"stable", v.stable},
          {"agree", v.agree},
          {"endpoint_conjugate", v.endpoint_conjugate},
          {"near_zero_eigenvalues", v.near_zero_eigenvalues},
          {"smallest_relative_eigenvalue", v.smallest_relative},
          {"conjugates", to_json(v.conjugates)}};
}

nlohmann::json to_json(const LemmaReport& r) {
  nlohmann::json arr = nlohmann::json::array();
  for (const LemmaResult& x : r.results)
    arr.push_back({{"name", x.name},
                   {"active", x.active},
                   {"pass", x.pass},
                   {"value", x.value},
                   {"bound", x.bound},
                   {"detail", x.detail}});
  return {{"lemmas", arr}, {"all_pass", r.all_pass}};
}

}  // namespace lgeom
