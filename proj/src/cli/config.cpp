#include "hardylab/cli/config.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace hardylab::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, path + ": " + msg);
}

void allow_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) fail(path + "." + key, "unknown key");
  }
}

double get_double(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

std::int64_t get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) {
    // Accept integral floats such as 1e6.
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (d == static_cast<double>(static_cast<std::int64_t>(d))) {
        return static_cast<std::int64_t>(d);
      }
    }
    fail(path, "expected an integer");
  }
  return v.get<std::int64_t>();
}

std::uint64_t get_u64(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const std::int64_t i = get_int(v, path);
  if (i < 0) fail(path, "expected a nonnegative integer");
  return static_cast<std::uint64_t>(i);
}

std::vector<double> get_doubles(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(get_double(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

template <class T, class Get>
void read(const json& obj, const char* key, const std::string& path, T& out, Get get) {
  if (obj.contains(key)) out = static_cast<T>(get(obj.at(key), path + "." + key));
}

BumpSpec parse_bump(const json& v, const std::string& path, int dim) {
  allow_keys(v, path, {"center", "width"});
  BumpSpec b;
  if (!v.contains("center")) fail(path, "missing center");
  b.center = get_doubles(v.at("center"), path + ".center");
  if (static_cast<int>(b.center.size()) != dim) fail(path + ".center", "length must equal dim");
  read(v, "width", path, b.width, get_double);
  if (!(b.width > 0.0)) fail(path + ".width", "must be positive");
  return b;
}

void parse_problem(const json& p, RunConfig& cfg) {
  allow_keys(p, "problem", {"dim", "poles", "weight", "k_mu", "c_mu"});
  if (!p.contains("dim")) fail("problem", "missing dim");
  if (!p.contains("poles")) fail("problem", "missing poles");
  cfg.poles.dim = static_cast<int>(get_int(p.at("dim"), "problem.dim"));
  if (cfg.poles.dim < 3 || cfg.poles.dim > kMaxDim) {
    fail("problem.dim", "must lie in [3, " + std::to_string(kMaxDim) + "]");
  }
  const json& poles = p.at("poles");
  if (!poles.is_array() || poles.empty()) fail("problem.poles", "expected a nonempty array");
  for (std::size_t i = 0; i < poles.size(); ++i) {
    const std::string path = "problem.poles[" + std::to_string(i) + "]";
    const auto xs = get_doubles(poles[i], path);
    if (static_cast<int>(xs.size()) != cfg.poles.dim) fail(path, "length must equal dim");
    Vec a(cfg.poles.dim);
    for (int j = 0; j < cfg.poles.dim; ++j) a[j] = xs[static_cast<std::size_t>(j)];
    cfg.poles.poles.push_back(a);
  }
  if (p.contains("weight")) {
    const json& w = p.at("weight");
    allow_keys(w, "problem.weight", {"kind", "gamma", "delta", "m"});
    if (!w.contains("kind") || !w.at("kind").is_string()) {
      fail("problem.weight.kind", "expected \"unit\" or \"poly_exp\"");
    }
    const std::string kind = w.at("kind").get<std::string>();
    if (kind == "unit") {
      if (w.size() > 1) fail("problem.weight", "unit weight takes no parameters");
      cfg.weight = WeightSpec::unit();
    } else if (kind == "poly_exp") {
      WeightSpec ws = WeightSpec::poly_exp(0.0, 0.0, 2.0);
      read(w, "gamma", "problem.weight", ws.gamma, get_double);
      read(w, "delta", "problem.weight", ws.delta, get_double);
      read(w, "m", "problem.weight", ws.m, get_double);
      cfg.weight = ws;
    } else {
      fail("problem.weight.kind", "unknown weight kind \"" + kind + "\"");
    }
  }
  if (p.contains("k_mu")) {
    const json& k = p.at("k_mu");
    if (k.is_string()) {
      if (k.get<std::string>() != "auto") fail("problem.k_mu", "expected a number or \"auto\"");
      cfg.k_mu.reset();
    } else {
      cfg.k_mu = get_double(k, "problem.k_mu");
    }
  } else if (cfg.weight.is_unit()) {
    cfg.k_mu = 0.0;
  }
  read(p, "c_mu", "problem", cfg.c_mu, get_double);
}

void parse_quadrature(const json& q, QuadratureSpec& s) {
  allow_keys(q, "quadrature",
             {"pole_radius", "far_radius", "radial_levels", "mc_samples", "tail_exponent",
              "radial_order", "angular_order", "max_evaluations"});
  read(q, "pole_radius", "quadrature", s.pole_radius, get_double);
  read(q, "far_radius", "quadrature", s.far_radius, get_double);
  read(q, "radial_levels", "quadrature", s.radial_levels, get_int);
  read(q, "mc_samples", "quadrature", s.mc_samples, get_int);
  read(q, "tail_exponent", "quadrature", s.tail_exponent, get_double);
  read(q, "radial_order", "quadrature", s.radial_order, get_int);
  read(q, "angular_order", "quadrature", s.angular_order, get_int);
  read(q, "max_evaluations", "quadrature", s.max_evaluations, get_int);
}

void parse_experiments(const json& e, RunConfig& cfg) {
  allow_keys(e, "experiments", {"verify", "optimality", "beta_sweep", "spectral", "certify"});
  const int dim = cfg.poles.dim;
  if (e.contains("verify")) {
    const json& v = e.at("verify");
    const std::string path = "experiments.verify";
    allow_keys(v, path, {"corpus_size", "bumps", "residual_tol", "ratio_tol"});
    read(v, "corpus_size", path, cfg.verify.corpus_size, get_int);
    if (v.contains("bumps")) {
      const json& bs = v.at("bumps");
      if (!bs.is_array()) fail(path + ".bumps", "expected an array");
      for (std::size_t i = 0; i < bs.size(); ++i) {
        cfg.verify.bumps.push_back(
            parse_bump(bs[i], path + ".bumps[" + std::to_string(i) + "]", dim));
      }
    }
    read(v, "residual_tol", path, cfg.verify.residual_tol, get_double);
    read(v, "ratio_tol", path, cfg.verify.ratio_tol, get_double);
  }
  if (e.contains("optimality")) {
    const json& o = e.at("optimality");
    const std::string path = "experiments.optimality";
    allow_keys(o, path, {"eps", "slope_tol", "ratio_tol", "r_squared_min"});
    if (o.contains("eps")) cfg.optimality.eps = get_doubles(o.at("eps"), path + ".eps");
    read(o, "slope_tol", path, cfg.optimality.slope_tol, get_double);
    read(o, "ratio_tol", path, cfg.optimality.ratio_tol, get_double);
    read(o, "r_squared_min", path, cfg.optimality.r_squared_min, get_double);
  }
  if (e.contains("beta_sweep")) {
    const json& b = e.at("beta_sweep");
    const std::string path = "experiments.beta_sweep";
    allow_keys(b, path, {"beta_min", "beta_max", "count", "phi", "residual_tol"});
    read(b, "beta_min", path, cfg.beta_sweep.beta_min, get_double);
    read(b, "beta_max", path, cfg.beta_sweep.beta_max, get_double);
    read(b, "count", path, cfg.beta_sweep.count, get_int);
    if (b.contains("phi")) cfg.beta_sweep.phi = parse_bump(b.at("phi"), path + ".phi", dim);
    read(b, "residual_tol", path, cfg.beta_sweep.residual_tol, get_double);
  }
  if (e.contains("spectral")) {
    const json& s = e.at("spectral");
    const std::string path = "experiments.spectral";
    allow_keys(s, path, {"generic_count", "basis_seed", "enrich_eps", "lower_tol", "upper_tol"});
    read(s, "generic_count", path, cfg.spectral.generic_count, get_int);
    read(s, "basis_seed", path, cfg.spectral.basis_seed, get_u64);
    if (s.contains("enrich_eps")) {
      cfg.spectral.enrich_eps = get_doubles(s.at("enrich_eps"), path + ".enrich_eps");
    }
    read(s, "lower_tol", path, cfg.spectral.lower_tol, get_double);
    read(s, "upper_tol", path, cfg.spectral.upper_tol, get_double);
  }
  if (e.contains("certify")) {
    const json& c = e.at("certify");
    const std::string path = "experiments.certify";
    allow_keys(c, path, {"samples", "approach_levels", "approach_directions", "far_radius"});
    H2SampleSpec& h = cfg.certify.sample;
    read(c, "samples", path, h.samples, get_int);
    read(c, "approach_levels", path, h.approach_levels, get_int);
    read(c, "approach_directions", path, h.approach_directions, get_int);
    read(c, "far_radius", path, h.far_radius, get_double);
  }
}

void parse_output(const json& o, RunConfig& cfg) {
  allow_keys(o, "output", {"directory", "formats"});
  if (o.contains("directory")) {
    if (!o.at("directory").is_string()) fail("output.directory", "expected a string");
    cfg.output_directory = o.at("directory").get<std::string>();
  }
  if (o.contains("formats")) {
    const json& f = o.at("formats");
    if (!f.is_array()) fail("output.formats", "expected an array");
    cfg.write_csv = cfg.write_json = false;
    for (const json& x : f) {
      const std::string s = x.is_string() ? x.get<std::string>() : "";
      if (s == "csv") {
        cfg.write_csv = true;
      } else if (s == "json") {
        cfg.write_json = true;
      } else {
        fail("output.formats", "expected \"csv\" or \"json\"");
      }
    }
  }
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed JSON: ") + e.what());
  }
  allow_keys(root, "config", {"problem", "quadrature", "experiments", "output", "seed"});
  if (!root.contains("problem")) fail("config", "missing problem");
  RunConfig cfg;
  parse_problem(root.at("problem"), cfg);
  if (root.contains("quadrature")) parse_quadrature(root.at("quadrature"), cfg.quadrature);
  if (root.contains("experiments")) parse_experiments(root.at("experiments"), cfg);
  if (root.contains("output")) parse_output(root.at("output"), cfg);
  if (root.contains("seed")) cfg.seed = get_u64(root.at("seed"), "seed");
  cfg.quadrature.seed = cfg.seed;
  cfg.certify.sample.seed = cfg.seed;

  try {
    validate_config(cfg.poles, cfg.weight);
    validate_spec(cfg.quadrature, cfg.poles, /*pole_relative=*/true);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace hardylab::cli
