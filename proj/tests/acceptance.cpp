// One [PASS]/[FAIL] line per acceptance criterion. Exit status is nonzero if any fails.

#include "hardylab/cli/commands.hpp"
#include "hardylab/experiments.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace hardylab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double x, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

PoleConfig two_poles(int dim = 3) { return {dim, {Vec::Zero(dim), unit_vec(dim, 0, 2.0)}}; }

// ---------------------------------------------------------------- 1

Outcome pointwise_identities() {
  const auto t0 = Clock::now();
  Outcome o;
  std::mt19937_64 rng(101);
  double cross = 0.0, grad = 0.0, lap = 0.0, inv = 0.0;
  int count = 0;
  for (int dim = 3; dim <= 5; ++dim) {
    for (int n = 1; n <= 4; ++n) {
      for (int k = 0; k < 100; ++k, ++count) {
        const auto inst = oracle::random_instance(rng, dim, n);
        const PoleConfig& cfg = inst.cfg;
        const Vec& x = inst.x;
        const double beta = (dim - 2.0) / n;

        if (n >= 2) {
          const CrossTermGap g = cross_term_identity(x, cfg);
          cross = std::max(cross, std::abs(g.gap()) / (std::abs(g.lhs) + std::abs(g.rhs)));
        }
        const Vec lg = hardy_factor(x, cfg, beta).log_gradient;
        grad = std::max(grad, (lg - oracle::fd_log_gradient(x, cfg, beta)).norm() / lg.norm());
        const double lr = laplacian_ratio(x, cfg, beta);
        const double scale = std::max(std::abs(lr), lg.squaredNorm());
        lap = std::max(lap, std::abs(lr - oracle::fd_laplacian_ratio(x, cfg, beta)) / scale);

        const double v = potential_v(x, cfg);
        const double vs = std::max(v, 1e-300);
        double e = std::abs(v - oracle::v_direct(x, cfg)) / vs;
        PoleConfig perm = cfg;
        std::shuffle(perm.poles.begin(), perm.poles.end(), rng);
        e = std::max(e, std::abs(potential_v(x, perm) - v) / vs);
        const Vec t = Vec::Constant(dim, -0.8);
        PoleConfig moved = cfg;
        for (Vec& a : moved.poles) a += t;
        e = std::max(e, std::abs(potential_v(x + t, moved) - v) / vs);
        PoleConfig scaled = cfg;
        for (Vec& a : scaled.poles) a *= 1.75;
        e = std::max(e, std::abs(1.75 * 1.75 * potential_v(1.75 * x, scaled) - v) / vs);
        inv = std::max(inv, e);
      }
    }
  }
  const double secs = seconds_since(t0);
  o.require(cross <= 1e-12, "cross-term gap " + fmt(cross));
  o.require(grad < 1e-6, "grad f/f error " + fmt(grad));
  o.require(lap < 1e-4, "Laplacian ratio error " + fmt(lap));
  o.require(inv < 1e-10, "V invariance error " + fmt(inv));
  o.require(secs < 10.0, "runtime " + fmt(secs) + " s");
  o.note(std::to_string(count) + " instances, cross " + fmt(cross, 2) + ", grad " +
         fmt(grad, 2) + ", lap " + fmt(lap, 2) + ", V " + fmt(inv, 2) + ", " + fmt(secs, 3) +
         " s");
  return o;
}

// ---------------------------------------------------------------- 2

Outcome near_pole() {
  const auto t0 = Clock::now();
  Outcome o;
  std::mt19937_64 rng(102);
  double worst = 0.0;
  int count = 0;
  for (int dim = 3; dim <= 5; ++dim) {
    for (int n = 2; n <= 4; ++n) {
      for (int k = 0; k < 20; ++k, ++count) {
        const auto inst = oracle::random_instance(rng, dim, n);
        const std::size_t pole = static_cast<std::size_t>(k) % inst.cfg.size();
        const Vec& a = inst.cfg.poles[pole];
        const Vec dir = (inst.x - a).normalized();
        // q(d) = (n - 1) + O(d); Richardson on the last two distances.
        double q_prev = 0.0, q = 0.0;
        for (int j = 1; j <= 5; ++j) {
          const double d = std::pow(10.0, -j);
          q_prev = q;
          q = d * d * potential_v(a + d * dir, inst.cfg);
        }
        const double limit = (10.0 * q - q_prev) / 9.0;
        worst = std::max(worst, std::abs(limit - (n - 1.0)) / (n - 1.0));
      }
    }
  }
  const double secs = seconds_since(t0);
  o.require(worst < 0.01, "extrapolated limit off by " + fmt(worst));
  o.require(secs < 1.0, "runtime " + fmt(secs) + " s");
  o.note(std::to_string(count) + " approaches, worst relative error " + fmt(worst, 2) + ", " +
         fmt(secs, 3) + " s");
  return o;
}

// ---------------------------------------------------------------- 3

Outcome quadrature_selftest() {
  const auto t0 = Clock::now();
  Outcome o;
  const PoleConfig cfg = two_poles();
  QuadratureSpec spec;
  spec.mc_samples = 8'000'000;
  const double zero[] = {0.0, 0.0};
  const IntegralResult g =
      integrate([](const Vec& x) { return std::exp(-x.squaredNorm()); }, zero, cfg, spec);
  const double g_err = std::abs(g.value / std::pow(std::numbers::pi, 1.5) - 1.0);
  o.require(g_err < 1e-4, "Gaussian rel. error " + fmt(g_err));

  const IntegralResult b = integrate_ball([](const Vec& x) { return 1.0 / x.squaredNorm(); },
                                          Vec::Zero(3), 1.0, 2.0, 24, 8, 12);
  const double b_err = std::abs(b.value / (4.0 * std::numbers::pi) - 1.0);
  o.require(b_err < 1e-4, "ball rel. error " + fmt(b_err));

  const WeightSpec w = WeightSpec::poly_exp(0.5, 1.0, 2.0);
  const double exps[] = {2.5, 0.5};
  const IntegralResult s = integrate(
      [&](const Vec& x) { return weight_value(x, cfg, w) / x.squaredNorm(); }, exps, cfg,
      QuadratureSpec{});
  const oracle::McResult mc = oracle::weighted_inverse_square(100'000'000, 20240917);
  const double combined = std::hypot(s.error(), mc.std_error);
  const double z = std::abs(s.value - mc.mean) / combined;
  o.require(z <= 3.0, "singular integral " + fmt(s.value, 10) + " vs oracle " +
                          fmt(mc.mean, 10) + " (" + fmt(z, 3) + " sigma)");
  const double secs = seconds_since(t0);
  o.require(secs < 300.0, "runtime " + fmt(secs) + " s");
  o.note("Gaussian " + fmt(g_err, 2) + ", ball " + fmt(b_err, 2) + ", singular " +
         fmt(s.value, 8) + " vs MC " + fmt(mc.mean, 8) + " +- " + fmt(mc.std_error, 2) + " (" +
         fmt(z, 2) + " sigma), " + fmt(secs, 3) + " s");
  return o;
}

// ---------------------------------------------------------------- 4, 5

struct CorpusRun {
  std::vector<VerifyRecord> unit, polyexp;
  double c_unit = 0.0, c_poly = 0.0;
  double k_poly = 0.0;
  bool k_found = false;
  double secs = 0.0;
};

const CorpusRun& corpus_run() {
  static const CorpusRun run = [] {
    const auto t0 = Clock::now();
    CorpusRun r;
    const PoleConfig cfg = two_poles();
    const QuadratureSpec spec;
    const HardyParams pu = derive_params(cfg, 0.0, 0.0);
    r.c_unit = pu.c_n_mu;
    const auto corpus = default_corpus(cfg, 10);
    r.unit = verify_corpus(cfg, WeightSpec::unit(), pu, corpus, spec, 1e-3, 0.02);
    const WeightSpec w = WeightSpec::poly_exp(0.5, 0.0, 2.0);
    const KSelection sel = select_k_mu(cfg, w, H2SampleSpec{});
    if (sel.chosen) {
      r.k_found = true;
      r.k_poly = *sel.chosen;
      const HardyParams pp = derive_params(cfg, r.k_poly, 0.0);
      r.c_poly = pp.c_n_mu;
      r.polyexp = verify_corpus(cfg, w, pp, corpus, spec, 1e-2, 0.02);
    }
    r.secs = seconds_since(t0);
    return r;
  }();
  return run;
}

Outcome identity_residual_criterion() {
  Outcome o;
  const CorpusRun& r = corpus_run();
  double wu = 0.0, wp = 0.0;
  for (const VerifyRecord& v : r.unit) wu = std::max(wu, std::abs(v.residual.value));
  for (const VerifyRecord& v : r.polyexp) wp = std::max(wp, std::abs(v.residual.value));
  o.require(r.unit.size() == 10, "unit corpus size " + std::to_string(r.unit.size()));
  o.require(wu < 1e-3, "unit residual " + fmt(wu));
  o.require(r.k_found, "no certified K_mu for PolyExp(1/2, 0)");
  o.require(r.polyexp.size() == 10, "PolyExp corpus size " + std::to_string(r.polyexp.size()));
  o.require(wp < 1e-2, "PolyExp residual " + fmt(wp));
  o.require(r.secs < 600.0, "runtime " + fmt(r.secs) + " s");
  o.note("max |residual| unit " + fmt(wu, 3) + ", PolyExp (K = " + fmt(r.k_poly) + ") " +
         fmt(wp, 3) + ", " + fmt(r.secs, 3) + " s");
  return o;
}

Outcome ratio_bound_criterion() {
  Outcome o;
  const CorpusRun& r = corpus_run();
  o.require(r.c_unit == 0.25, "c for N=3, n=2, K=0 is " + fmt(r.c_unit, 17));
  double mu = INFINITY, mp = INFINITY;
  for (const VerifyRecord& v : r.unit) {
    if (v.ratio) mu = std::min(mu, v.ratio->value);
    o.require(v.ratio.has_value(), "missing ratio for " + v.name);
  }
  for (const VerifyRecord& v : r.polyexp) {
    if (v.ratio) mp = std::min(mp, v.ratio->value);
    o.require(v.ratio.has_value(), "missing ratio for " + v.name);
  }
  o.require(mu >= r.c_unit * 0.98, "unit min ratio " + fmt(mu));
  o.require(mp >= r.c_poly * 0.98, "PolyExp min ratio " + fmt(mp) + " vs c " + fmt(r.c_poly));
  o.note("c = " + fmt(r.c_unit) + ", min ratio unit " + fmt(mu) + "; PolyExp c = " +
         fmt(r.c_poly) + ", min ratio " + fmt(mp));
  return o;
}

// ---------------------------------------------------------------- 6

Outcome sharpness_criterion() {
  const auto t0 = Clock::now();
  Outcome o;
  for (int dim : {3, 4}) {
    const PoleConfig cfg = two_poles(dim);
    const HardyParams p = derive_params(cfg, 0.0, 0.0);
    QuadratureSpec spec;
    spec.radial_levels = 64;
    const double radius = sweep_radius(cfg, spec);
    const auto eps = default_eps_grid(cfg, radius);
    const OptimalitySweep s = optimality_sweep(cfg, WeightSpec::unit(), p, eps, spec);
    const double expected_slope = dim - 2.0;
    const double rel_slope = std::abs(s.fit.slope - expected_slope) / expected_slope;
    const double c = (dim - 2.0) * (dim - 2.0) / 4.0;
    const double ratio = s.records.back().hardy_ratio.value / c;
    const std::string tag = "N=" + std::to_string(dim) + ": ";
    o.require(rel_slope <= 0.15, tag + "slope " + fmt(s.fit.slope));
    o.require(s.fit.r_squared >= 0.98, tag + "r^2 " + fmt(s.fit.r_squared));
    o.require(std::abs(ratio - 1.0) <= 0.10, tag + "ratio/c " + fmt(ratio));
    o.note(tag + "slope " + fmt(s.fit.slope, 5) + ", r^2 " + fmt(s.fit.r_squared, 8) +
           ", ratio/c at eps=" + fmt(s.records.back().eps, 3) + " " + fmt(ratio, 5));
  }
  const double secs = seconds_since(t0);
  o.require(secs < 1800.0, "runtime " + fmt(secs) + " s");
  o.note(fmt(secs, 3) + " s");
  return o;
}

// ---------------------------------------------------------------- 7

Outcome beta_sweep_criterion() {
  Outcome o;
  struct Case {
    int dim, n;
    double k;
  };
  for (const Case c : {Case{3, 2, 0.0}, Case{4, 2, 0.0}, Case{5, 3, -0.5}, Case{3, 1, 0.0}}) {
    PoleConfig cfg{c.dim, {}};
    for (int i = 0; i < c.n; ++i) cfg.poles.push_back(unit_vec(c.dim, 0, 2.0 * i));
    const double top = c.dim + c.k - 2.0;
    const double argmax = top / (2.0 * c.n);
    const double maximum = top * top / (4.0 * c.n);
    const auto grid = beta_grid(0.01, 2.0 * top / c.n, 200);
    const BetaSweep s = beta_sweep(cfg, WeightSpec::unit(), c.k, grid, std::nullopt, {});
    const std::string tag = "N=" + std::to_string(c.dim) + ",n=" + std::to_string(c.n) +
                            ",K=" + fmt(c.k) + ": ";
    o.require(std::abs(s.grid_argmax - argmax) <= s.grid_step * (1 + 1e-12),
              tag + "argmax " + fmt(s.grid_argmax, 12));
    const double at = inverse_square_coefficient(c.dim, c.n, c.k, argmax);
    o.require(std::abs(at - maximum) <= 1e-12, tag + "max " + fmt(at, 17));
    o.require(s.grid_max <= maximum + 1e-12, tag + "grid max above formula");
  }
  o.note("N=3, n=2, K=0: argmax 1/4, max 1/8 (and three more shapes)");
  return o;
}

// ---------------------------------------------------------------- 8

Outcome spectral_criterion() {
  const auto t0 = Clock::now();
  Outcome o;
  const PoleConfig cfg = two_poles();
  const HardyParams p = derive_params(cfg, 0.0, 0.0);
  QuadratureSpec spec;
  spec.radial_levels = 64;
  const double radius = sweep_radius(cfg, spec);
  std::vector<TestFunction> basis = generic_bump_basis(cfg, 20, 7, radius);
  for (double e : {0.2, 0.1, 0.05}) basis.push_back(TestFunction::optimality_phi(radius, e, p.beta));
  const GramMatrices g = assemble_gram(cfg, WeightSpec::unit(), p, basis, spec);
  std::vector<std::size_t> first(20);
  for (std::size_t i = 0; i < 20; ++i) first[i] = i;
  const auto kept_generic = screen_basis(g, first);
  const auto kept_all = screen_basis(g);
  const SpectralResult lo = smallest_eigenpair(g, kept_generic);
  const SpectralResult hi = smallest_eigenpair(g, kept_all);
  const double c = 0.25;
  o.require(lo.lambda_min >= 0.98 * c, "generic lambda " + fmt(lo.lambda_min));
  o.require(hi.lambda_min <= 1.15 * c, "enriched lambda " + fmt(hi.lambda_min));
  const double gap = lo.lambda_min - hi.lambda_min;
  o.require(gap >= -1e-10, "monotonicity gap " + fmt(gap));
  // Same check on nested prefixes of the enriched kept set.
  double prev = INFINITY;
  for (std::size_t m = 1; m <= kept_all.size(); ++m) {
    const double lam =
        smallest_eigenpair(g, std::span<const std::size_t>(kept_all.data(), m)).lambda_min;
    o.require(lam <= prev + 1e-10 * std::abs(prev), "prefix " + std::to_string(m) + " rises");
    prev = lam;
  }
  const double secs = seconds_since(t0);
  o.require(secs < 1200.0, "runtime " + fmt(secs) + " s");
  o.note("lambda/c generic " + fmt(lo.lambda_min / c, 5) + " (" +
         std::to_string(kept_generic.size()) + " kept), enriched " + fmt(hi.lambda_min / c, 5) +
         " (" + std::to_string(kept_all.size()) + " kept), " + fmt(secs, 3) + " s");
  return o;
}

// ---------------------------------------------------------------- 9

Outcome certification_criterion() {
  Outcome o;
  const H2Report unit = h2_certify(two_poles(), WeightSpec::unit(), 0.5, 0.0, {});
  o.require(unit.certified() && std::abs(unit.c_mu) < 1e-6 * unit.scale,
            "Unit C_mu " + fmt(unit.c_mu));
  const PoleConfig one{3, {make_vec({0.3, 0, 0})}};
  const WeightSpec w = WeightSpec::poly_exp(0.5, 0.0, 2.0);
  const H2Report good = h2_certify(one, w, 0.5, -0.5, {});
  o.require(good.certified() && std::abs(good.c_mu) < 1e-6 * good.scale,
            "single-pole C_mu " + fmt(good.c_mu));
  const H2Report bad = h2_certify(one, w, 1.0, 0.0, {});
  o.require(bad.status == H2Status::UnboundedSuspected,
            std::string("wrong K status ") + to_string(bad.status));

  for (int n : {2, 3}) {
    PoleConfig cfg{3, {}};
    for (int i = 0; i < n; ++i) cfg.poles.push_back(unit_vec(3, i % 3, 2.0 * (i > 0)));
    const H3H4Report r = h3_h4_certify(cfg, WeightSpec::unit(), 0.0);
    double h3 = 0.0;
    for (const H3Pole& pole : r.h3) {
      for (std::size_t j = 0; j < pole.radii.size(); ++j) {
        const double exact = 4.0 * std::numbers::pi / 3.0 * pole.radii[j];
        h3 = std::max(h3, std::abs(pole.scaled_mass[j].value - exact) / exact);
      }
    }
    const double p = 2.0 / n + 2.0;
    bool h4 = r.h4_local_pass == (p < 3.0);
    for (const H4Pole& h : r.h4_local) h4 = h4 && std::abs(h.exponent - p) < 1e-12;
    const std::string tag = "n=" + std::to_string(n) + ": ";
    o.require(h3 < 1e-6 && r.h3_pass, tag + "H3 error " + fmt(h3));
    o.require(h4, tag + "H4 i) exponent/verdict");
    o.require(r.h4_far_pass, tag + "H4 ii)");
  }
  o.note("C_mu unit " + fmt(unit.c_mu) + ", single pole " + fmt(good.c_mu) + ", wrong K " +
         to_string(bad.status) + "; H3 = (4/3) pi delta, H4 i) p = 2/n + 2");
  return o;
}

// ---------------------------------------------------------------- 10

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hardylab");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  return cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string csv_body(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string all = ss.str();
  const auto nl = all.find('\n');
  return nl == std::string::npos ? std::string() : all.substr(nl + 1);
}

Outcome determinism_criterion() {
  const auto t0 = Clock::now();
  Outcome o;
  const std::string configs = std::string(HARDYLAB_SOURCE_DIR) + "/configs/";
  struct Cmd {
    const char* name;
    const char* file;
    const char* config;
  };
  const Cmd cmds[] = {
      {"selftest", "selftest.csv", nullptr},
      {"verify", "verify.csv", "verify_unit_n2.json"},
      {"optimality", "optimality.csv", "optimality_n3.json"},
      {"beta-sweep", "beta_sweep.csv", "beta_sweep.json"},
      {"spectral", "spectral.csv", "spectral.json"},
      {"certify", "certify.csv", "certify.json"},
  };
  const fs::path root = fs::temp_directory_path() / "hardylab-determinism";
  fs::remove_all(root);
  for (const Cmd& c : cmds) {
    std::string bodies[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = root / (std::string(c.name) + std::to_string(run));
      std::vector<std::string> args = {c.name, "--out", out.string(), "--seed", "7", "--quiet"};
      if (c.config) {
        args.push_back("--config");
        args.push_back(configs + c.config);
      }
      const int code = run_cli(args);
      o.require(code == 0, std::string(c.name) + " exit " + std::to_string(code));
      bodies[run] = csv_body(out / c.file);
    }
    o.require(!bodies[0].empty(), std::string(c.name) + " wrote no CSV");
    o.require(bodies[0] == bodies[1], std::string(c.name) + " CSV bodies differ");
  }
  fs::remove_all(root);
  o.note("6 commands run twice, CSV bodies identical; " + fmt(seconds_since(t0), 3) + " s");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"1 pointwise identity suite", pointwise_identities},
      {"2 near-pole asymptotic", near_pole},
      {"3 quadrature self-test", quadrature_selftest},
      {"4 integral identity residual", identity_residual_criterion},
      {"5 ratio bound", ratio_bound_criterion},
      {"6 sharpness sweep", sharpness_criterion},
      {"7 beta sweep", beta_sweep_criterion},
      {"8 spectral bracket", spectral_criterion},
      {"9 hypothesis certification", certification_criterion},
      {"10 determinism", determinism_criterion},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures,
              std::size(criteria));
  return failures == 0 ? 0 : 1;
}
