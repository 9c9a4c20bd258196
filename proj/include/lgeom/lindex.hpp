#pragma once

// The L-index form in s = sqrt(tau):
//   I(U,V) = int [ <D_s U, D_s V> + <R(U,Z)V,Z> + 2 s^2 Hess R(U,V)
//                 - 2s (nabla_U Ric)(V,Z) - 2s (nabla_V Ric)(U,Z)
//                 + 2s (nabla_Z Ric)(U,V) ] ds
// which is the tau-integral of sqrt(tau) times the usual integrand.
// Integration by parts gives I(U,V) = [<D_s U, V>] - int <J U, V> ds with
// J U = D_s D_s U - (right-hand side of the Jacobi system).

#include <array>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "lgeom/fields.hpp"
#include "lgeom/oracle.hpp"

namespace lgeom {

struct IndexFormOptions {
  std::optional<double> s_begin;
  std::optional<double> s_end;
  /// Fault injection: negate the curvature term of the integrand only.
  bool flip_curvature_sign = false;
  double rel_tol = 1e-9;
  /// Also integrate |<D_sU,D_sV>| + |potential| for a size reference.
  bool compute_scale = false;
};

struct IndexFormValue {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
  double scale = 0.0;
};

IndexFormValue index_form_detail(const LGeodesicPath& path, const FieldAlong& U, const FieldAlong& V,
                                 const IndexFormOptions& opts = {});
double index_form(const LGeodesicPath& path, const FieldAlong& U, const FieldAlong& V,
                  const IndexFormOptions& opts = {});

struct KeyLemmaTerms {
  double index = 0.0;
  double boundary = 0.0;
  double operator_integral = 0.0;
  double residual = 0.0;
};

/// The boundary term sums one-sided limits over the smooth pieces of U.
KeyLemmaTerms key_lemma_terms(const LGeodesicPath& path, const FieldAlong& U, const FieldAlong& V,
                              const IndexFormOptions& opts = {});
double key_lemma_residual(const LGeodesicPath& path, const FieldAlong& U, const FieldAlong& V,
                          const IndexFormOptions& opts = {});

struct SecondVariation {
  double lhs = 0.0;              // I(Y,Y)
  double rhs = 0.0;              // d2L - first variation along nabla_Y Y
  double second_difference = 0.0;
  double first_variation_term = 0.0;
};

SecondVariation second_variation_check(const LGeodesicPath& path, const FieldAlong& Y,
                                       std::array<double, 2> eps = {1e-2, 1e-3},
                                       const VariationOptions& vopts = {});

struct IndexMatrix {
  int n = 0;
  int m = 0;
  double s_end = 0.0;
  std::vector<double> mesh;
  Mat A;  // I(phi_i E_a, phi_j E_b), unknown (i, a) at (i - 1) n + a
  Mat M;  // mass matrix int phi_i phi_j G_ab
  std::vector<Mat> frame_gram;
};

/// Hat functions on a uniform mesh of m elements over [0, s_end] (default s_max).
IndexMatrix assemble(const LGeodesicPath& path, int m, std::optional<double> s_end = std::nullopt,
                     bool flip_curvature_sign = false);

struct IndexSpectrum {
  int index = 0;
  double norm = 0.0;
  std::vector<double> eigenvalues;   // ascending
  std::vector<double> near_zero;     // |lambda| < 10 zero_tol norm
};

IndexSpectrum index_spectrum(const IndexMatrix& im, double zero_tol = 1e-9);
int morse_index(const LGeodesicPath& path, int m, double zero_tol = 1e-9);
/// Smallest eigenvalue of A x = lambda M x.
double min_generalized_eigenvalue(const IndexMatrix& im);

struct MorseOptions {
  double tol = 1e-10;
  double zero_tol = 1e-9;
  double sep = 1e-4;
  bool flip_curvature_sign = false;
};

struct MorseVerdict {
  int discrete_index = 0;
  int conjugate_sum = 0;
  std::vector<int> mesh_sizes_used;
  std::vector<int> index_per_mesh;
  bool stable = false;
  bool agree = false;
  bool endpoint_conjugate = false;
  std::vector<double> near_zero_eigenvalues;
  std::vector<double> smallest_relative;  // smallest |lambda| / norm per mesh
  ConjugateReport conjugates;
};

MorseVerdict verify_morse(const LGeodesicPath& path, const std::vector<int>& meshes,
                          const MorseOptions& opts = {});

struct LemmaResult {
  std::string name;
  bool active = false;
  bool pass = true;
  double value = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct LemmaReport {
  std::vector<LemmaResult> results;
  bool all_pass = true;
  const LemmaResult& get(const std::string& name) const;
};

struct LemmaOptions {
  unsigned long long seed = 1;
  double tol = 1e-10;
  int mesh = 64;
  double zero_tol = 1e-9;
  int trials = 3;
  /// |lambda_extrapolated| bound for L3, relative to (pi / s*)^2.
  double l3_rel_tol = 1e-3;
};

LemmaReport lemma_suite(const LGeodesicPath& path, const LemmaOptions& opts = {});

nlohmann::json to_json(const MorseVerdict& v);
nlohmann::json to_json(const LemmaReport& r);

}  // namespace lgeom
