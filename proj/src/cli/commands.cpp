#include "hardylab/cli/commands.hpp"

#include "hardylab/cli/config.hpp"
#include "hardylab/cli/report.hpp"
#include "hardylab/cli/selftest.hpp"
#include "hardylab/experiments.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>

namespace hardylab::cli {
namespace {

using Clock = std::chrono::steady_clock;

std::string num(double x) { return format_number(x); }

std::string indexed(const char* stem, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%02zu", stem, i);
  return buf;
}

RunConfig load(const CommandOptions& o) {
  if (o.config_path.empty()) throw Error(ErrorCode::ConfigError, "--config is required");
  RunConfig c = load_config(o.config_path);
  if (o.seed) {
    c.seed = *o.seed;
    c.quadrature.seed = *o.seed;
    c.certify.sample.seed = *o.seed;
  }
  if (o.out_dir) c.output_directory = *o.out_dir;
  return c;
}

HardyParams params(const RunConfig& c, double k_mu) {
  try {
    return derive_params(c.poles, k_mu, c.c_mu);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

void add_h2_rows(Report& rep, const std::string& case_name, double k_mu, const H2Report& h) {
  const std::string k = num(k_mu);
  rep.add(case_name, k, "c_mu", h.c_mu, std::nullopt, "info");
  rep.add(case_name, k, "scale", h.scale, std::nullopt, "info");
  rep.add(case_name, k, "relative_change", h.relative_change, std::nullopt, "info");
  rep.add(case_name, k, "k_admissible", h.k_admissible ? 1.0 : 0.0, std::nullopt, "info");
  rep.add(case_name, k, std::string("status_") + to_string(h.status), h.certified() ? 1.0 : 0.0,
          std::nullopt, "info");
}

// K from the config, or the first certified candidate.
double resolve_k(const RunConfig& c, Report& rep) {
  if (c.k_mu) return *c.k_mu;
  const KSelection sel = select_k_mu(c.poles, c.weight, c.certify.sample);
  for (const KCandidate& cand : sel.candidates) {
    if (cand.report) {
      add_h2_rows(rep, "k_candidate", cand.k_mu, *cand.report);
    } else {
      rep.add("k_candidate", num(cand.k_mu), "beta_positive", 0.0, std::nullopt, "info");
    }
  }
  if (!sel.chosen) {
    rep.check("summary", "", "k_mu_certified", std::nan(""), std::nullopt, false);
    throw Error(ErrorCode::UnboundedSuspected, "no K_mu candidate passed h2_certify");
  }
  rep.add("summary", "", "k_mu_auto", *sel.chosen, std::nullopt, "info");
  return *sel.chosen;
}

int finish(const Report& rep, const std::string& dir, bool csv, bool json, double wall,
           bool quiet, const std::string& name) {
  const std::string stamp = utc_timestamp();
  if (csv || json) std::filesystem::create_directories(dir);
  if (csv) rep.write_csv((std::filesystem::path(dir) / (name + ".csv")).string(), stamp, wall);
  if (json) rep.write_json((std::filesystem::path(dir) / (name + ".json")).string(), stamp, wall);
  if (!quiet) {
    for (const ReportRow& r : rep.rows()) {
      if (r.case_name != "summary" && r.status != "fail") continue;
      std::cout << (r.status == "fail" ? "[FAIL] " : r.status == "pass" ? "[PASS] " : "       ")
                << r.case_name << ' ' << (r.parameter.empty() ? "" : r.parameter + " ")
                << r.quantity << " = " << num(r.value);
      if (r.error) std::cout << " +- " << num(*r.error);
      std::cout << '\n';
    }
    std::cout << name << ": " << (rep.all_pass() ? "pass" : "FAIL") << " (" << num(wall)
              << " s)\n";
  }
  return rep.all_pass() ? kExitPass : kExitNumerical;
}

int finish(const Report& rep, const RunConfig& c, double wall, bool quiet,
           const std::string& name) {
  return finish(rep, c.output_directory, c.write_csv, c.write_json, wall, quiet, name);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void describe_problem(Report& rep, const RunConfig& c, const HardyParams& p) {
  auto& s = rep.summary();
  s["dim"] = c.poles.dim;
  s["poles"] = c.poles.size();
  s["weight"] = c.weight.is_unit() ? "unit" : "poly_exp";
  s["k_mu"] = p.k_mu;
  s["beta"] = p.beta;
  s["c_n_mu"] = p.c_n_mu;
  s["seed"] = c.seed;
}

}  // namespace

// ---------------------------------------------------------------- selftest

int cmd_selftest(const CommandOptions& opts) {
  const auto t0 = Clock::now();
  if (!(opts.tolerance_scale > 0.0)) {
    throw Error(ErrorCode::ConfigError, "tolerance scale must be positive");
  }
  const auto results = run_selftest(opts.filter, opts.tolerance_scale);
  if (results.empty()) {
    throw Error(ErrorCode::ConfigError, "filter \"" + opts.filter + "\" matches no case");
  }
  Report rep("selftest");
  for (const SelfTestResult& r : results) {
    rep.check(r.name, std::to_string(r.instances), "worst_error", r.worst, r.tolerance, r.pass);
    if (!opts.quiet) {
      std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": worst " << num(r.worst)
                << " (tol " << num(r.tolerance) << ", " << r.instances << " instances) "
                << r.detail << '\n';
    }
  }
  rep.summary()["cases"] = results.size();
  rep.summary()["tolerance_scale"] = opts.tolerance_scale;
  const bool write = opts.out_dir.has_value();
  const int code = finish(rep, opts.out_dir.value_or(""), write, write, seconds_since(t0),
                          true, "selftest");
  if (!opts.quiet) std::cout << "selftest: " << (code == kExitPass ? "pass" : "FAIL") << '\n';
  return code;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const CommandOptions& opts) {
  const auto t0 = Clock::now();
  const RunConfig c = load(opts);
  Report rep("verify");
  const double k = resolve_k(c, rep);
  const HardyParams p = params(c, k);
  describe_problem(rep, c, p);

  std::vector<TestFunction> corpus;
  if (c.verify.bumps.empty()) {
    corpus = default_corpus(c.poles, c.verify.corpus_size);
  } else {
    for (const BumpSpec& b : c.verify.bumps) {
      Vec center(c.poles.dim);
      for (int j = 0; j < c.poles.dim; ++j) center[j] = b.center[static_cast<std::size_t>(j)];
      corpus.push_back(TestFunction::gaussian_bump(center, b.width));
    }
  }
  const auto records = verify_corpus(c.poles, c.weight, p, corpus, c.quadrature,
                                     c.verify.residual_tol, c.verify.ratio_tol);
  double worst_residual = 0.0;
  double min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const VerifyRecord& r = records[i];
    const std::string name = indexed("phi", i);
    rep.check(name, r.name, "identity_residual", r.residual.value, r.residual.error,
              r.residual_pass);
    worst_residual = std::max(worst_residual, std::abs(r.residual.value));
    if (r.ratio) {
      rep.check(name, r.name, "hardy_ratio", r.ratio->value, r.ratio->error, r.ratio_pass);
      min_ratio = std::min(min_ratio, r.ratio->value);
    } else {
      rep.add(name, r.name, "hardy_ratio", std::nan(""), std::nullopt, "skipped");
    }
  }
  rep.check("summary", "", "max_abs_identity_residual", worst_residual, std::nullopt,
            worst_residual < c.verify.residual_tol);
  rep.add("summary", "", "c_n_mu", p.c_n_mu, std::nullopt, "info");
  if (c.poles.size() >= 2) {
    rep.check("summary", "", "min_hardy_ratio", min_ratio, std::nullopt,
              min_ratio >= p.c_n_mu * (1.0 - c.verify.ratio_tol));
    rep.summary()["min_hardy_ratio"] = min_ratio;
  } else {
    rep.add("summary", "", "hardy_ratio_skipped", 1.0, std::nullopt, "info");
    rep.summary()["note"] = "single pole: V = 0, ratio rows skipped";
    if (!opts.quiet) std::cout << "note: single pole, V = 0; hardy_ratio rows skipped\n";
  }
  rep.summary()["max_abs_identity_residual"] = worst_residual;
  return finish(rep, c, seconds_since(t0), opts.quiet, "verify");
}

// ---------------------------------------------------------------- optimality

int cmd_optimality(const CommandOptions& opts) {
  const auto t0 = Clock::now();
  const RunConfig c = load(opts);
  Report rep("optimality");
  const double k = resolve_k(c, rep);
  const HardyParams p = params(c, k);
  describe_problem(rep, c, p);
  const double radius = sweep_radius(c.poles, c.quadrature);
  const std::vector<double> eps =
      c.optimality.eps.empty() ? default_eps_grid(c.poles, radius) : c.optimality.eps;
  const OptimalitySweep sweep = optimality_sweep(c.poles, c.weight, p, eps, c.quadrature);

  for (const SweepRecord& r : sweep.records) {
    const std::string e = num(r.eps);
    rep.add("sweep", e, "remainder", r.remainder.value, r.remainder.error, "info");
    rep.add("sweep", e, "hardy_ratio", r.hardy_ratio.value, r.hardy_ratio.error, "info");
    rep.add("sweep", e, "deficit", r.deficit.value, r.deficit.error, "info");
    rep.add("sweep", e, "boundary_flux", r.boundary_flux.value, r.boundary_flux.error, "info");
    rep.add("sweep", e, "core_radius", r.excised ? r.core_radius : 0.0, std::nullopt, "info");
    rep.check("sweep", e, "deficit_minus_remainder_minus_flux",
              r.deficit.value - r.remainder.value - r.boundary_flux.value,
              r.deficit.error + r.remainder.error + r.boundary_flux.error, r.agrees());
  }
  const RateFit& fit = sweep.fit;
  if (fit.predicted_slope) {
    rep.check("summary", "", "fitted_slope", fit.slope, std::nullopt,
              fit.within(c.optimality.slope_tol));
    rep.add("summary", "", "predicted_slope", *fit.predicted_slope, std::nullopt, "info");
  } else {
    rep.add("summary", "", "fitted_slope", fit.slope, std::nullopt, "info");
  }
  rep.check("summary", "", "r_squared", fit.r_squared, std::nullopt,
            fit.r_squared >= c.optimality.r_squared_min);
  rep.check("summary", "", "remainder_decreasing", sweep.remainder_decreasing ? 1.0 : 0.0,
            std::nullopt, sweep.remainder_decreasing);
  const SweepRecord& last = sweep.records.back();
  const double rel = last.hardy_ratio.value / p.c_n_mu;
  rep.check("summary", num(last.eps), "ratio_over_c_at_smallest_eps", rel,
            last.hardy_ratio.error / p.c_n_mu,
            rel <= 1.0 + c.optimality.ratio_tol && rel >= 1.0 - 0.02);
  rep.add("summary", "", "c_n_mu", p.c_n_mu, std::nullopt, "info");

  auto& s = rep.summary();
  s["fitted_slope"] = fit.slope;
  s["predicted_slope"] = fit.predicted_slope ? nlohmann::ordered_json(*fit.predicted_slope)
                                             : nlohmann::ordered_json(nullptr);
  s["r_squared"] = fit.r_squared;
  s["ratio_over_c_at_smallest_eps"] = rel;
  return finish(rep, c, seconds_since(t0), opts.quiet, "optimality");
}

// ---------------------------------------------------------------- beta sweep

int cmd_beta_sweep(const CommandOptions& opts) {
  const auto t0 = Clock::now();
  const RunConfig c = load(opts);
  Report rep("beta_sweep");
  const double k = resolve_k(c, rep);
  const HardyParams p = params(c, k);
  describe_problem(rep, c, p);
  const BetaSweepSettings& bs = c.beta_sweep;
  const auto grid = beta_grid(bs.beta_min, bs.beta_max, bs.count);
  std::optional<TestFunction> phi;
  if (bs.phi) {
    Vec center(c.poles.dim);
    for (int j = 0; j < c.poles.dim; ++j) center[j] = bs.phi->center[static_cast<std::size_t>(j)];
    phi = TestFunction::gaussian_bump(center, bs.phi->width);
  }
  const BetaSweep sweep = beta_sweep(c.poles, c.weight, k, grid, phi, c.quadrature);

  for (const BetaRow& r : sweep.rows) {
    const std::string b = num(r.beta);
    rep.add("beta", b, "coefficient", r.coefficient, std::nullopt, "info");
    if (r.residual) {
      rep.check("beta", b, "identity_residual", r.residual->value, r.residual->error,
                std::abs(r.residual->value) < bs.residual_tol);
    }
  }
  const int n = static_cast<int>(c.poles.size());
  const double at_formula =
      inverse_square_coefficient(c.poles.dim, n, k, sweep.formula_argmax);
  const double tol = 1e-12 * std::max(1.0, std::abs(sweep.formula_max));
  rep.check("summary", "", "grid_argmax", sweep.grid_argmax, sweep.grid_step,
            std::abs(sweep.grid_argmax - sweep.formula_argmax) <= sweep.grid_step * (1 + 1e-12));
  rep.add("summary", "", "formula_argmax", sweep.formula_argmax, std::nullopt, "info");
  rep.add("summary", "", "refined_argmax", sweep.refined_argmax, std::nullopt, "info");
  rep.check("summary", "", "grid_max_not_above_formula", sweep.grid_max, std::nullopt,
            sweep.grid_max <= sweep.formula_max + tol);
  rep.check("summary", "", "coefficient_at_formula_argmax", at_formula, std::nullopt,
            std::abs(at_formula - sweep.formula_max) <= tol);
  rep.add("summary", "", "formula_max", sweep.formula_max, std::nullopt, "info");
  const double at_identity = inverse_square_coefficient(c.poles.dim, n, k, p.beta);
  rep.check("summary", num(p.beta), "coefficient_at_identity_beta", at_identity, std::nullopt,
            std::abs(at_identity) <= tol);

  auto& s = rep.summary();
  s["grid_argmax"] = sweep.grid_argmax;
  s["formula_argmax"] = sweep.formula_argmax;
  s["grid_step"] = sweep.grid_step;
  s["formula_max"] = sweep.formula_max;
  return finish(rep, c, seconds_since(t0), opts.quiet, "beta_sweep");
}

// ---------------------------------------------------------------- spectral

int cmd_spectral(const CommandOptions& opts) {
  const auto t0 = Clock::now();
  const RunConfig c = load(opts);
  Report rep("spectral");
  const double k = resolve_k(c, rep);
  const HardyParams p = params(c, k);
  describe_problem(rep, c, p);
  const SpectralSettings& ss = c.spectral;
  const double radius = sweep_radius(c.poles, c.quadrature);

  std::vector<TestFunction> basis =
      generic_bump_basis(c.poles, ss.generic_count, ss.basis_seed, radius);
  const std::size_t generic = basis.size();
  const double eps_bound = max_admissible_eps(c.poles, radius);
  for (double e : ss.enrich_eps) {
    if (!(e > 0.0 && e <= eps_bound)) {
      throw Error(ErrorCode::EpsilonInadmissible, "enrich eps " + num(e) + " is inadmissible");
    }
    basis.push_back(TestFunction::optimality_phi(radius, e, p.beta));
  }
  const GramMatrices gram = assemble_gram(c.poles, c.weight, p, basis, c.quadrature);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    rep.add(indexed("basis", i), basis[i].describe(), "rayleigh_quotient",
            gram.a(ii, ii) / gram.b(ii, ii), std::nullopt, "info");
  }

  std::vector<std::size_t> generic_idx(generic);
  std::iota(generic_idx.begin(), generic_idx.end(), std::size_t{0});
  const auto kept_generic = screen_basis(gram, generic_idx);
  const SpectralResult lo = smallest_eigenpair(gram, kept_generic);
  const double c0 = p.c_n_mu;
  rep.add("summary", "generic", "kept", static_cast<double>(kept_generic.size()), std::nullopt,
          "info");
  rep.check("summary", "generic", "lambda_min_over_c", lo.lambda_min / c0, lo.error / c0,
            lo.lambda_min >= c0 * (1.0 - ss.lower_tol));

  nlohmann::ordered_json& s = rep.summary();
  s["c_n_mu"] = c0;
  s["lambda_generic"] = lo.lambda_min;
  if (basis.size() > generic) {
    const auto kept_all = screen_basis(gram);
    const SpectralResult hi = smallest_eigenpair(gram, kept_all);
    rep.add("summary", "enriched", "kept", static_cast<double>(kept_all.size()), std::nullopt,
            "info");
    rep.check("summary", "enriched", "lambda_min_over_c", hi.lambda_min / c0, hi.error / c0,
              hi.lambda_min <= c0 * (1.0 + ss.upper_tol) &&
                  hi.lambda_min >= c0 * (1.0 - ss.lower_tol));
    // The generic kept set is a subset of the enriched one (greedy screening in order).
    const double gap = lo.lambda_min - hi.lambda_min;
    rep.check("summary", "", "subspace_monotonicity_gap", gap, std::nullopt,
              gap >= -1e-10 * std::max(1.0, std::abs(lo.lambda_min)));
    s["lambda_enriched"] = hi.lambda_min;
  }
  return finish(rep, c, seconds_since(t0), opts.quiet, "spectral");
}

// ---------------------------------------------------------------- certify

int cmd_certify(const CommandOptions& opts) {
  const auto t0 = Clock::now();
  const RunConfig c = load(opts);
  Report rep("certify");
  double k = 0.0;
  if (c.k_mu) {
    k = *c.k_mu;
    const double beta = (c.poles.dim + k - 2.0) / static_cast<double>(c.poles.size());
    if (!(beta > 0.0)) throw Error(ErrorCode::ConfigError, "k_mu gives beta <= 0");
    const H2Report h = h2_certify(c.poles, c.weight, beta, k, c.certify.sample);
    add_h2_rows(rep, "h2", k, h);
    rep.check("summary", num(k), "h2_certified", h.certified() ? 1.0 : 0.0, std::nullopt,
              h.certified());
    rep.add("summary", num(k), "c_mu", h.c_mu, std::nullopt, "info");
    rep.summary()["h2_status"] = to_string(h.status);
    rep.summary()["c_mu"] = h.c_mu;
  } else {
    k = resolve_k(c, rep);
    rep.check("summary", num(k), "h2_certified", 1.0, std::nullopt, true);
  }
  const HardyParams p = params(c, k);
  describe_problem(rep, c, p);

  const H3H4Report hh = h3_h4_certify(c.poles, c.weight, k);
  const int dim = c.poles.dim;
  const double omega = sphere_surface_measure(dim);
  for (std::size_t i = 0; i < hh.h3.size(); ++i) {
    const H3Pole& pole = hh.h3[i];
    const std::string name = indexed("h3_pole", i);
    for (std::size_t j = 0; j < pole.radii.size(); ++j) {
      const double delta = pole.radii[j];
      const IntegralResult& m = pole.scaled_mass[j];
      if (c.weight.is_unit()) {
        // delta^-2 |B(a, delta)| = omega_N / N * delta^(N-2).
        const double exact = omega / dim * std::pow(delta, dim - 2);
        rep.check(name, num(delta), "scaled_mass", m.value, m.error(),
                  std::abs(m.value - exact) <= 1e-6 * exact + 3.0 * m.error());
      } else {
        rep.add(name, num(delta), "scaled_mass", m.value, m.error(), "info");
      }
    }
    rep.check(name, "", "decreasing_to_zero", pole.log_slope, std::nullopt, pole.pass);
  }
  rep.add("summary", "", "h3_holds", hh.h3_pass ? 1.0 : 0.0, std::nullopt, "info");

  const double n = static_cast<double>(c.poles.size());
  const double gamma = c.weight.pole_exponent();
  const double expected_p = (2.0 / n) * (dim + k - 2.0) + 2.0 + gamma;
  for (std::size_t i = 0; i < hh.h4_local.size(); ++i) {
    rep.check(indexed("h4_local_pole", i), "", "exponent", hh.h4_local[i].exponent,
              std::nullopt, std::abs(hh.h4_local[i].exponent - expected_p) <= 1e-12);
  }
  rep.add("summary", "", "h4_local_holds", hh.h4_local_pass ? 1.0 : 0.0, std::nullopt, "info");
  if (hh.decay_exponent) {
    rep.add("h4_far", "", "decay_exponent", *hh.decay_exponent, std::nullopt, "info");
    rep.add("h4_far", "", "decay_sup", hh.decay_sup, std::nullopt, "info");
    rep.add("h4_far", "", "decay_ratio", hh.decay_ratio, std::nullopt, "info");
  }
  rep.add("summary", "", "h4_far_holds", hh.h4_far_pass ? 1.0 : 0.0, std::nullopt, "info");
  if (c.weight.is_unit()) {
    rep.check("summary", "", "h4_far_matches_closed_form", hh.h4_far_pass ? 1.0 : 0.0,
              std::nullopt, hh.h4_far_pass);
  }

  auto& s = rep.summary();
  s["h3"] = hh.h3_pass;
  s["h4_local"] = hh.h4_local_pass;
  s["h4_local_exponent"] = expected_p;
  s["h4_far"] = hh.h4_far_pass;
  return finish(rep, c, seconds_since(t0), opts.quiet, "certify");
}

// ---------------------------------------------------------------- dispatch

int run_cli(int argc, char** argv) {
  CLI::App app{"hardylab: numerical laboratory for weighted multipolar Hardy inequalities"};
  app.require_subcommand(1);
  CommandOptions opts;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* cfg = sub->add_option("--config", opts.config_path, "JSON run configuration");
    if (needs_config) cfg->required();
    sub->add_option_function<std::string>(
        "--out", [&](const std::string& v) { opts.out_dir = v; }, "output directory");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { opts.seed = v; },
        "random seed (overrides the config)");
    sub->add_flag("--quiet", opts.quiet, "print nothing on success");
  };

  std::function<int(const CommandOptions&)> chosen;
  auto* st = app.add_subcommand("selftest", "quadrature corpus and pointwise identities");
  common(st, false);
  st->add_option("--filter", opts.filter, "run only cases whose name contains this");
  st->add_option("--tolerance-scale", opts.tolerance_scale)->group("");
  st->callback([&] { chosen = cmd_selftest; });

  const std::pair<const char*, std::pair<const char*, int (*)(const CommandOptions&)>> subs[] = {
      {"verify", {"identity residual and ratio over the test-function corpus", cmd_verify}},
      {"optimality", {"remainder decay along the optimality sequence", cmd_optimality}},
      {"beta-sweep", {"coefficient of the inverse-square term over beta", cmd_beta_sweep}},
      {"spectral", {"generalized Rayleigh quotient over a finite basis", cmd_spectral}},
      {"certify", {"sampling-based check of the weight hypotheses", cmd_certify}},
  };
  for (const auto& [name, info] : subs) {
    auto* sub = app.add_subcommand(name, info.first);
    common(sub, true);
    auto* fn = info.second;
    sub->callback([&chosen, fn] { chosen = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }
  try {
    return chosen(opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace hardylab::cli
