#include "lgeom/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>
#include <utility>

#include "lgeom/report_io.hpp"

namespace lgeom {

namespace {

[[noreturn]] void bad_config(const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); }

Vec vec_field(const nlohmann::json& j, const char* key, int n) {
  if (!j.contains(key)) bad_config(std::string("missing required field '") + key + "'");
  const nlohmann::json& a = j.at(key);
  if (!a.is_array() || static_cast<int>(a.size()) != n)
    bad_config(std::string("'") + key + "' must be an array of " + std::to_string(n) + " numbers");
  Vec x(n);
  for (int i = 0; i < n; ++i) {
    if (!a[i].is_number()) bad_config(std::string("'") + key + "' must contain numbers");
    x(i) = a[i].get<double>();
  }
  if (!x.allFinite()) bad_config(std::string("'") + key + "' must be finite");
  return x;
}

double real_field(const nlohmann::json& j, const char* key) {
  if (!j.at(key).is_number()) bad_config(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

std::filesystem::path out_file(const RunConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.output_dir) / name;
}

LGeodesicPath shoot_config(const RunConfig& cfg) {
  ShootOptions so;
  so.tol = cfg.tol;
  so.tau_epsilon = cfg.tau_epsilon;
  return shoot(cfg.background, cfg.p, cfg.v, Tau(cfg.tau_bar), so);
}

bool is_config_error(ErrorKind k) {
  return k == ErrorKind::InvalidConfig || k == ErrorKind::InvalidArgument || k == ErrorKind::NegativeTau ||
         k == ErrorKind::InvalidChart || k == ErrorKind::NotApplicable;
}

template <class F>
int guarded(F body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_config_error(e.kind()) ? 2 : 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: InvalidConfig: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace

std::vector<int> parse_mesh_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int m = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(m);
    } catch (const std::exception&) {
      bad_config("mesh list entries must be integers: '" + text + "'");
    }
  }
  if (out.empty()) bad_config("mesh list is empty");
  return out;
}

RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) bad_config("configuration must be a JSON object");
  RunConfig c;
  if (!j.contains("background")) bad_config("missing required field 'background'");
  c.background = FlowBackground::from_json(j.at("background"));
  const int n = c.background.dim();
  c.p.coords = vec_field(j, "p", n);
  c.p.chart_id = j.value("chart", 0);
  c.v = vec_field(j, "v", n);
  if (!j.contains("tau_bar")) bad_config("missing required field 'tau_bar'");
  c.tau_bar = real_field(j, "tau_bar");
  if (!(c.tau_bar > 0.0) || !std::isfinite(c.tau_bar)) bad_config("'tau_bar' must be positive and finite");
  if (j.contains("tol")) c.tol = real_field(j, "tol");
  if (!(c.tol > 0.0)) bad_config("'tol' must be positive");
  if (j.contains("meshes")) {
    c.meshes.clear();
    for (const auto& m : j.at("meshes")) {
      if (!m.is_number_integer()) bad_config("'meshes' must contain integers");
      c.meshes.push_back(m.get<int>());
    }
  }
  if (c.meshes.empty()) bad_config("'meshes' is empty");
  for (std::size_t i = 0; i < c.meshes.size(); ++i) {
    if (c.meshes[i] < 4) bad_config("mesh sizes must be >= 4");
    if (i > 0 && c.meshes[i] <= c.meshes[i - 1]) bad_config("'meshes' must be sorted ascending");
  }
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) bad_config("'seed' must be an integer");
    c.seed = j.at("seed").get<unsigned long long>();
  }
  if (j.contains("tau_epsilon")) c.tau_epsilon = real_field(j, "tau_epsilon");
  if (j.contains("samples")) c.samples = j.at("samples").get<int>();
  if (c.samples < 2) bad_config("'samples' must be >= 2");
  try {
    check_chart(c.background, c.p);
  } catch (const Error& e) {
    bad_config(std::string("'p' is not a valid chart point: ") + e.what());
  }
  return c;
}

SweepConfig parse_sweep_config(const nlohmann::json& j) {
  SweepConfig s;
  nlohmann::json base = j;
  const int n = FlowBackground::from_json(j.at("background")).dim();
  if (!base.contains("v")) base["v"] = std::vector<double>(n, 0.0);
  s.base = parse_run_config(base);
  if (!j.contains("v_grid")) bad_config("missing required field 'v_grid'");
  const nlohmann::json& g = j.at("v_grid");
  if (!g.is_array() || static_cast<int>(g.size()) != n)
    bad_config("'v_grid' must list one axis {min, max, count} per dimension");
  double total = 1.0;
  for (const auto& a : g) {
    GridAxis ax;
    ax.min = a.at("min").get<double>();
    ax.max = a.at("max").get<double>();
    ax.count = a.at("count").get<int>();
    if (ax.count < 1) bad_config("grid axis count must be >= 1");
    if (ax.count > 1 && !(ax.max > ax.min)) bad_config("grid axis needs max > min");
    total *= ax.count;
    s.axes.push_back(ax);
  }
  if (total > 1e6) bad_config("sweep grid exceeds 1e6 points");
  if (j.contains("workers")) s.workers = j.at("workers").get<int>();
  if (s.workers < 1) bad_config("'workers' must be >= 1");
  return s;
}

long sweep_size(const SweepConfig& cfg) {
  long total = 1;
  for (const GridAxis& a : cfg.axes) total *= a.count;
  return total;
}

Vec sweep_point(const SweepConfig& cfg, long index) {
  const int n = static_cast<int>(cfg.axes.size());
  Vec v(n);
  for (int i = n - 1; i >= 0; --i) {
    const GridAxis& a = cfg.axes[i];
    const long k = index % a.count;
    index /= a.count;
    v(i) = a.count == 1 ? a.min : a.min + (a.max - a.min) * static_cast<double>(k) / (a.count - 1);
  }
  return v;
}

// ---------------------------------------------------------------------------

int cmd_shoot(const RunConfig& cfg) {
  const LGeodesicPath path = shoot_config(cfg);
  const LValue L = llength(path);
  std::ostringstream csv;
  write_path_csv(csv, path, cfg.samples);
  write_text_file(out_file(cfg, "path.csv"), csv.str());
  write_json_file(out_file(cfg, "shoot.json"), {{"endpoint", chart_point_json(path.endpoint())},
                                                {"L", L.value},
                                                {"error_estimate", L.quadrature_error_estimate},
                                                {"tau_bar", cfg.tau_bar},
                                                {"stats", stats_json(path.stats())}});
  return 0;
}

int cmd_conjugates(const RunConfig& cfg) {
  const LGeodesicPath path = shoot_config(cfg);
  ScanOptions so;
  so.tol = cfg.tol;
  write_json_file(out_file(cfg, "conjugates.json"), to_json(conjugate_scan(path, so)));
  return 0;
}

int cmd_index(const RunConfig& cfg) {
  const LGeodesicPath path = shoot_config(cfg);
  nlohmann::json meshes = nlohmann::json::array();
  for (int m : cfg.meshes) {
    const IndexSpectrum sp = index_spectrum(assemble(path, m, std::nullopt, cfg.corrupt_curvature_sign));
    std::ostringstream csv;
    write_eigenvalues_csv(csv, sp);
    write_text_file(out_file(cfg, "eigenvalues_m" + std::to_string(m) + ".csv"), csv.str());
    meshes.push_back({{"m", m}, {"morse_index", sp.index}, {"norm", sp.norm}, {"near_zero", sp.near_zero}});
  }
  write_json_file(out_file(cfg, "index.json"), {{"meshes", meshes}});
  return 0;
}

// Fast paths need far more samples than the default before the discrete
// oracle settles, so double until two sample counts agree.
std::pair<SecondVariation, int> settled_second_variation(const LGeodesicPath& path, const FieldAlong& Y) {
  VariationOptions vo;
  SecondVariation r = second_variation_check(path, Y, {1e-2, 1e-3}, vo);
  while (vo.samples < 256001) {
    vo.samples = 2 * vo.samples - 1;
    const SecondVariation next = second_variation_check(path, Y, {1e-2, 1e-3}, vo);
    const bool settled = std::abs(next.rhs - r.rhs) < 1e-5 * (1.0 + std::abs(next.rhs));
    r = next;
    if (settled) break;
  }
  return {r, vo.samples};
}

int cmd_verify(const RunConfig& cfg) {
  const LGeodesicPath path = shoot_config(cfg);
  const int n = path.dim();
  std::mt19937_64 rng(cfg.seed);
  bool ok = true;
  nlohmann::json out;

  MorseOptions mo;
  mo.tol = cfg.tol;
  mo.flip_curvature_sign = cfg.corrupt_curvature_sign;
  const MorseVerdict mv = verify_morse(path, cfg.meshes, mo);
  const bool morse_ok = mv.agree && mv.near_zero_eigenvalues.empty();
  ok = ok && morse_ok;
  out["morse"] = to_json(mv);
  out["morse"]["pass"] = morse_ok;

  LemmaOptions lo;
  lo.seed = cfg.seed;
  lo.tol = cfg.tol;
  lo.mesh = cfg.meshes.front();
  const LemmaReport lr = lemma_suite(path, lo);
  ok = ok && lr.all_pass;
  out["lemmas"] = to_json(lr);

  IndexFormOptions io;
  io.flip_curvature_sign = cfg.corrupt_curvature_sign;
  nlohmann::json kl = nlohmann::json::array();
  bool kl_ok = true;
  for (int t = 0; t < 5; ++t) {
    const FieldAlong U = random_polynomial_field(n, rng, 3, false);
    const FieldAlong V = random_polynomial_field(n, rng, 3, false);
    const KeyLemmaTerms k = key_lemma_terms(path, U, V, io);
    const bool pass = k.residual < 1e-7 * (1.0 + std::abs(k.index));
    kl_ok = kl_ok && pass;
    kl.push_back({{"index", k.index}, {"boundary", k.boundary}, {"residual", k.residual}, {"pass", pass}});
  }
  ok = ok && kl_ok;
  out["key_lemma"] = {{"trials", kl}, {"pass", kl_ok}};

  nlohmann::json sv = nlohmann::json::array();
  bool sv_ok = true;
  for (int t = 0; t < 2; ++t) {
    const FieldAlong Y = random_polynomial_field(n, rng, 3, true);
    const auto [r, samples] = settled_second_variation(path, Y);
    const bool pass = std::abs(r.lhs - r.rhs) < 1e-4 * (1.0 + std::abs(r.lhs));
    sv_ok = sv_ok && pass;
    sv.push_back({{"lhs", r.lhs}, {"rhs", r.rhs}, {"samples", samples}, {"pass", pass}});
  }
  ok = ok && sv_ok;
  out["second_variation"] = {{"trials", sv}, {"pass", sv_ok}};
  out["corrupt_curvature_sign"] = cfg.corrupt_curvature_sign;
  out["pass"] = ok;
  write_json_file(out_file(cfg, "verdict.json"), out);
  return ok ? 0 : 1;
}

int cmd_sweep(const SweepConfig& cfg) {
  const long N = sweep_size(cfg);
  const int n = cfg.base.background.dim();
  std::vector<std::string> rows(static_cast<std::size_t>(N));
  std::atomic<long> next{0};
  auto worker = [&]() {
    for (long i = next++; i < N; i = next++) {
      const Vec v = sweep_point(cfg, i);
      std::ostringstream row;
      row << i;
      for (int k = 0; k < n; ++k) row << ',' << format_real(v(k));
      std::string err;
      std::string end(static_cast<std::size_t>(n + 2), ',');
      std::string rest = ",,";
      try {
        RunConfig rc = cfg.base;
        rc.v = v;
        const LGeodesicPath path = shoot_config(rc);
        const ChartPoint x = path.endpoint();
        std::ostringstream e;
        for (int k = 0; k < n; ++k) e << ',' << format_real(x.coords(k));
        e << ',' << x.chart_id << ',' << format_real(llength(path).value);
        end = e.str();
        ScanOptions so;
        so.tol = rc.tol;
        const ConjugateReport cr = conjugate_scan(path, so);
        const int mi = morse_index(path, rc.meshes.back());
        rest = "," + std::to_string(cr.total_multiplicity) + "," + std::to_string(mi);
      } catch (const std::exception& ex) {
        err = ex.what();
        for (char& c : err)
          if (c == ',' || c == '\n' || c == '"') c = ';';
      }
      row << end << rest << ',' << err << '\n';
      rows[static_cast<std::size_t>(i)] = row.str();
    }
  };
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<long>(cfg.workers, N));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "row";
  for (int k = 0; k < n; ++k) csv << ",v" << k;
  for (int k = 0; k < n; ++k) csv << ",end" << k;
  csv << ",chart,L,conjugate_count,morse_index,errors\n";
  for (const std::string& r : rows) csv << r;
  write_text_file(out_file(cfg.base, "sweep.csv"), csv.str());
  return 0;
}

int cmd_selftest() {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
    if (!ok) ++failures;
  };
  const FlowBackground e2 = FlowBackground::euclidean(2);
  const ChartPoint o{Vec::Zero(2), 0};
  Vec v(2);
  v << 1.0, 0.0;
  const LGeodesicPath pe = shoot(e2, o, v, Tau(1.0));
  check("euclidean endpoint", (pe.endpoint().coords - Vec::Unit(2, 0) * 2.0).norm() < 1e-8);
  check("euclidean L", std::abs(llength(pe).value - 2.0) < 1e-8);

  const FlowBackground s2 = FlowBackground::sphere(2, 1.0);
  const LGeodesicPath pc = shoot(s2, o, Vec::Zero(2), Tau(1.0));
  check("sphere constant L", std::abs(llength(pc).value - (2.0 - std::sqrt(2.0) * std::atan(std::sqrt(2.0)))) < 1e-9);
  check("sphere constant has no conjugate points", conjugate_scan(pc).points.empty());

  Vec w(2);
  w << 0.3, 0.1;
  const LGeodesicPath ps = shoot(s2, o, w, Tau(1.0));
  std::mt19937_64 rng(7);
  const FieldAlong U = random_polynomial_field(2, rng, 3, false);
  const FieldAlong V = random_polynomial_field(2, rng, 3, false);
  const KeyLemmaTerms k = key_lemma_terms(ps, U, V);
  check("key lemma residual", k.residual < 1e-7 * (1.0 + std::abs(k.index)));
  IndexFormOptions flip;
  flip.flip_curvature_sign = true;
  check("corrupted curvature sign is detected", key_lemma_terms(ps, U, V, flip).residual > 1e-2);

  const LemmaReport lr = lemma_suite(pe);
  check("lemma suite (euclidean)", lr.all_pass);
  return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv) {
  CLI::App app{"L-geodesics, L-Jacobi fields and the L-index form on closed-form backward Ricci flows"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file, out_dir, mesh;
  std::optional<double> tol, tau_eps;
  std::optional<unsigned long long> seed;
  std::optional<int> workers;
  bool corrupt = false;
  app.add_option("--config", config_file, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--tol", tol, "integrator tolerance");
  app.add_option("--seed", seed, "seed for randomized checks");
  app.add_option("--mesh", mesh, "comma separated mesh sizes, e.g. 64,128");
  app.add_option("--tau-epsilon", tau_eps, "switch to the unregularized tau-form from this tau");
  app.add_option("--workers", workers, "sweep worker threads");
  app.add_flag("--corrupt-curvature-sign", corrupt, "debug: negate the curvature term of the index form");

  auto* c_shoot = app.add_subcommand("shoot", "integrate one L-geodesic, write path.csv and shoot.json");
  auto* c_conj = app.add_subcommand("conjugates", "conjugate points along the geodesic");
  auto* c_index = app.add_subcommand("index", "discrete Morse index and eigenvalues");
  auto* c_verify = app.add_subcommand("verify", "Morse index theorem and lemma checks; exit 1 on failure");
  auto* c_sweep = app.add_subcommand("sweep", "tabulate conjugate counts and indices over a v grid");
  auto* c_self = app.add_subcommand("selftest", "quick internal consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (c_self->parsed()) return guarded([] { return cmd_selftest(); });

  return guarded([&]() -> int {
    if (config_file.empty()) bad_config("--config is required");
    std::ifstream in(config_file);
    if (!in) bad_config("cannot read " + config_file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      bad_config(std::string("malformed JSON: ") + e.what());
    }
    auto apply = [&](RunConfig& rc) {
      if (!out_dir.empty()) rc.output_dir = out_dir;
      if (tol) {
        if (!(*tol > 0.0)) bad_config("--tol must be positive");
        rc.tol = *tol;
      }
      if (seed) rc.seed = *seed;
      if (!mesh.empty()) {
        rc.meshes = parse_mesh_list(mesh);
        for (std::size_t i = 0; i < rc.meshes.size(); ++i)
          if (rc.meshes[i] < 4 || (i > 0 && rc.meshes[i] <= rc.meshes[i - 1]))
            bad_config("--mesh must be ascending sizes >= 4");
      }
      if (tau_eps) {
        if (!(*tau_eps > 0.0)) bad_config("--tau-epsilon must be positive");
        rc.tau_epsilon = *tau_eps;
      }
      rc.corrupt_curvature_sign = corrupt;
    };
    if (c_sweep->parsed()) {
      SweepConfig sc = parse_sweep_config(j);
      apply(sc.base);
      if (workers) {
        if (*workers < 1) bad_config("--workers must be >= 1");
        sc.workers = *workers;
      }
      return cmd_sweep(sc);
    }
    RunConfig rc = parse_run_config(j);
    apply(rc);
    if (c_shoot->parsed()) return cmd_shoot(rc);
    if (c_conj->parsed()) return cmd_conjugates(rc);
    if (c_index->parsed()) return cmd_index(rc);
    if (c_verify->parsed()) return cmd_verify(rc);
    bad_config("unknown command");
  });
}

}  // namespace lgeom
