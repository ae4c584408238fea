#include "kinreg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kinreg/claw.hpp"
#include "kinreg/error.hpp"
#include "kinreg/exponents.hpp"
#include "kinreg/json_out.hpp"
#include "kinreg/lpa.hpp"
#include "kinreg/nondeg.hpp"

namespace kinreg::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------- schema

// Reads typed keys from a config object, echoes the resolved value of every
// key into `out`, and rejects leftovers in finish().
class Section {
 public:
  Section(const json& in, json& out, std::string path) : in_(in), out_(out), path_(std::move(path)) {
    if (!in_.is_object()) throw InvalidInput("config key '" + label() + "': expected an object");
    if (!out_.is_object()) out_ = json::object();
  }

  bool has(const std::string& key) const { return in_.contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = fetch(key, fallback.has_value());
    double x = fallback.value_or(0.0);
    if (v != nullptr) {
      if (!v->is_number()) throw type_error(key, "a number");
      x = v->get<double>();
    }
    if (!std::isfinite(x)) throw InvalidInput("config key '" + name(key) + "': non-finite value");
    out_[key] = x;
    return x;
  }

  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
    const json* v = fetch(key, fallback.has_value());
    int x = fallback.value_or(0);
    if (v != nullptr) {
      if (!v->is_number_integer()) throw type_error(key, "an integer");
      const auto raw = v->get<long long>();
      if (raw < -(1LL << 31) || raw >= (1LL << 31))
        throw InvalidInput("config key '" + name(key) + "': integer out of range");
      x = static_cast<int>(raw);
    }
    out_[key] = x;
    return x;
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = fetch(key, fallback.has_value());
    std::string x = fallback.value_or("");
    if (v != nullptr) {
      if (!v->is_string()) throw type_error(key, "a string");
      x = v->get<std::string>();
    }
    out_[key] = x;
    return x;
  }

  std::vector<double> numbers(const std::string& key,
                              std::optional<std::vector<double>> fallback = std::nullopt) {
    const json* v = fetch(key, fallback.has_value());
    std::vector<double> x = fallback.value_or(std::vector<double>{});
    if (v != nullptr) {
      if (!v->is_array()) throw type_error(key, "an array of numbers");
      x.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw type_error(key, "an array of numbers");
        x.push_back(e.get<double>());
        if (!std::isfinite(x.back()))
          throw InvalidInput("config key '" + name(key) + "': non-finite value");
      }
    }
    out_[key] = x;
    return x;
  }

  /// Nested object; an absent key yields an empty object so defaults apply.
  Section object(const std::string& key) {
    used_.insert(key);
    static const json empty = json::object();
    const json& sub = in_.contains(key) ? in_.at(key) : empty;
    if (!sub.is_object()) throw type_error(key, "an object");
    return Section(sub, out_[key], name(key));
  }

  void finish() const {
    for (auto it = in_.begin(); it != in_.end(); ++it)
      if (!used_.count(it.key())) throw InvalidInput("unknown config key '" + name(it.key()) + "'");
  }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }
  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* fetch(const std::string& key, bool optional) {
    used_.insert(key);
    if (!in_.contains(key)) {
      if (!optional) throw InvalidInput("missing config key '" + name(key) + "'");
      return nullptr;
    }
    return &in_.at(key);
  }

  InvalidInput type_error(const std::string& key, const char* what) const {
    return InvalidInput("config key '" + name(key) + "': expected " + what);
  }

  const json& in_;
  json& out_;
  std::string path_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------- outputs

struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;  ///< name, content
  json result = json::object();
  int exit_code = kOk;
  std::vector<std::string> failed_checks;

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

std::string csv_number(double v) { return std::isfinite(v) ? json_out::number(v) : "nan"; }

json number_or_null(const std::optional<double>& v) {
  return v.has_value() && std::isfinite(*v) ? json(*v) : json(nullptr);
}

void record_check(Artifacts& a, json& checks, const std::string& name, bool pass, double value) {
  checks.push_back({{"name", name}, {"pass", pass}, {"value", value}});
  if (!pass) a.failed_checks.push_back(name);
}

json read_json_file(const fs::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + what + " '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(what + " '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

fs::path resolve_relative(const fs::path& p, const fs::path& config_path) {
  if (p.is_absolute()) return p;
  return config_path.parent_path() / p;
}

json box_json(const nondeg::Box& b) { return {{"lo", b.lo}, {"hi", b.hi}}; }

nondeg::Box read_box(Section s, std::vector<double> lo, std::vector<double> hi) {
  nondeg::Box b{s.numbers("lo", std::move(lo)), s.numbers("hi", std::move(hi))};
  s.finish();
  return b;
}

nondeg::Sampling read_sampling(Section s, const nondeg::Sampling& d) {
  nondeg::Sampling out{s.integer("n_x", d.n_x), s.integer("n_sphere", d.n_sphere),
                       s.integer("n_lambda", d.n_lambda), s.integer("refine_levels", d.refine_levels)};
  s.finish();
  return out;
}

json alpha_json(const nondeg::AlphaEstimate& a) {
  return {{"alpha_hat", a.alpha_hat},
          {"constant_hat", a.constant_hat},
          {"r2", a.r2},
          {"degenerate", a.degenerate},
          {"fit_window", {{"first", a.window.first}, {"last", a.window.last}}}};
}

json exponent_json(const exponents::ExponentReport& rep) {
  json lines = json::array(), active = json::array();
  for (int i = 0; i < 8; ++i) {
    lines.push_back(rep.lines.lines[i]);
    active.push_back(rep.lines.active[i]);
  }
  return {{"feasible", rep.feasible},
          {"diagnostic", rep.diagnostic},
          {"branch", exponents::to_string(rep.branch)},
          {"r0", rep.r0},
          {"r_star", rep.r_star},
          {"epsilon_star", rep.epsilon_star},
          {"zeta", rep.derived.zeta},
          {"vareps", rep.derived.vareps},
          {"sigma", rep.derived.sigma},
          {"beta0", rep.beta0},
          {"lines", lines},
          {"active", active},
          {"binding_lines", rep.binding_lines},
          {"at_epsilon_endpoint", rep.at_epsilon_endpoint}};
}

json spectrum_json(const lpa::DyadicSpectrum& s) {
  return {{"r", s.r},
          {"norms", s.norms},
          {"beta_hat", number_or_null(s.beta_hat)},
          {"window", {{"jmin", s.fit_window.jmin}, {"jmax", s.fit_window.jmax}}},
          {"saturated", s.saturated},
          {"bands_fitted", s.bands_fitted}};
}

// ---------------------------------------------------------------- exponents

void run_exponents(const RunConfig& rc, Section& root, Artifacts& a) {
  exponents::ProblemParams pp;
  pp.alpha = root.number("alpha");
  pp.p = root.number("p");
  pp.dim_total = root.integer("dim_total");
  pp.kappa_abs = root.integer("kappa_abs");
  const bool has_r = root.has("r");
  const bool has_eps = root.has("epsilon");
  if (has_r != has_eps) throw InvalidInput("config keys 'r' and 'epsilon' must be given together");
  std::optional<double> r_fix, eps_fix;
  if (has_r) {
    r_fix = root.number("r");
    eps_fix = root.number("epsilon");
  }
  exponents::OptimizeOptions opts;
  opts.seed_grid = root.integer("seed_grid", 64);
  opts.exec = Exec::Parallel;
  std::optional<std::pair<int, int>> sweep;
  if (root.has("sweep")) {
    Section s = root.object("sweep");
    sweep = std::make_pair(s.integer("n_r", 100), s.integer("n_eps", 100));
    s.finish();
  }
  root.finish();
  pp.validate();
  if (opts.seed_grid < 2) throw InvalidInput("config key 'seed_grid': must be >= 2");

  exponents::ExponentReport rep;
  rep.branch = pp.branch();
  std::string mode = "optimize";
  if (!r_fix) {
    rep = exponents::optimize_beta0(pp, opts);
  } else {
    mode = "evaluate";
    const double r = *r_fix, eps = *eps_fix;
    try {
      rep.r0 = exponents::find_r0(pp);
    } catch (const Infeasible& e) {
      rep.diagnostic = e.what();
    }
    if (rep.diagnostic.empty()) {
      if (!(r > 1.0)) throw InvalidInput("config key 'r': must be > 1");
      if (!(eps > 0.0)) throw InvalidInput("config key 'epsilon': must be > 0");
      const auto choice = exponents::make_choice(pp, r, eps);
      rep.r_star = r;
      rep.epsilon_star = eps;
      rep.derived = {choice.zeta, choice.vareps, choice.sigma};
      rep.lines = exponents::constraint_lines(pp, choice);
      rep.beta0 = rep.lines.min_active();
      const auto b = exponents::eps_bounds(pp, r);
      std::ostringstream diag;
      if (!(r < rep.r0)) diag << "r outside (1, r0); ";
      if (!(eps > b.lower && eps < b.upper)) diag << "epsilon outside the admissible interval; ";
      if (!(rep.beta0 > 0.0)) diag << "an active line is not positive; ";
      rep.diagnostic = diag.str();
      if (!rep.diagnostic.empty()) rep.diagnostic.resize(rep.diagnostic.size() - 2);
      rep.feasible = rep.diagnostic.empty();
      for (int i = 0; i < 8; ++i)
        if (rep.lines.active[i] && rep.lines.lines[i] - rep.beta0 <= opts.binding_tol)
          rep.binding_lines.push_back(i + 1);
    }
  }
  a.result = exponent_json(rep);
  a.result["mode"] = mode;
  if (!rep.feasible) a.exit_code = kInfeasible;

  if (sweep && rep.r0 > 1.0) {
    const auto land = exponents::beta_landscape(pp, sweep->first, sweep->second, Exec::Parallel);
    std::ostringstream csv;
    csv << "r,epsilon,beta\n";
    for (std::size_t i = 0; i < land.r.size(); ++i)
      for (std::size_t k = 0; k < land.epsilon.size(); ++k)
        csv << csv_number(land.r[i]) << ',' << csv_number(land.epsilon[k]) << ','
            << csv_number(land.beta[i * land.epsilon.size() + k]) << '\n';
    a.add("sweep.csv", csv.str());
  }

  if (rc.verify) {
    json checks = json::array();
    if (rep.r0 > 1.0) {
      double worst = 0.0;
      const int n = 17;
      for (int i = 1; i < n; ++i) {
        const double r = 1.0 + (rep.r0 - 1.0) * i / n;
        const auto b = exponents::eps_bounds(pp, r);
        if (!(b.upper > b.lower)) continue;
        for (int k = 1; k < n; ++k) {
          const double eps = b.lower + (b.upper - b.lower) * k / n;
          const auto l = exponents::constraint_lines(pp, exponents::make_choice(pp, r, eps)).lines;
          worst = std::max({worst, std::abs(l[0] - l[1]), std::abs(l[0] - l[2])});
          if (pp.branch() == exponents::Branch::Low) worst = std::max(worst, std::abs(l[0] - l[3]));
        }
      }
      record_check(a, checks, "substitution_identities", worst < 1e-12, worst);
      const double r_in = rep.r0 - 1e-6 * (rep.r0 - 1.0);
      const auto b = exponents::eps_bounds(pp, r_in);
      record_check(a, checks, "interval_open_below_r0", b.upper > b.lower, b.upper - b.lower);
    }
    if (mode == "optimize" && rep.feasible) {
      auto rot = opts;
      rot.seed_rotation = 29;
      const auto again = exponents::optimize_beta0(pp, rot);
      record_check(a, checks, "seed_rotation_invariance", again.beta0 == rep.beta0,
                   std::abs(again.beta0 - rep.beta0));
    }
    a.result["verify"] = checks;
  }
}

// ---------------------------------------------------------------- nondeg

void run_nondeg(const RunConfig& rc, Section& root, Artifacts& a) {
  const bool table_mode = root.has("table");
  std::string drift_id;
  std::vector<double> params;
  fs::path table_path;
  if (table_mode) {
    if (root.has("drift")) throw InvalidInput("config keys 'drift' and 'table' are exclusive");
    table_path = resolve_relative(root.string("table"), rc.config_path);
  } else {
    drift_id = root.string("drift");
    params = root.numbers("params", std::vector<double>{});
  }
  const nondeg::Box K = read_box(root.object("K"), {0.0}, {1.0});
  const nondeg::Box L = read_box(root.object("L"), {-1.0}, {1.0});
  Section nu = root.object("nu");
  const double nu_start = nu.number("start", 0.25);
  const double nu_ratio = nu.number("ratio", 0.5);
  const int nu_count = nu.integer("count", 10);
  nu.finish();
  const nondeg::Sampling sampling = read_sampling(root.object("sampling"), {});
  std::optional<nondeg::FitWindow> window;
  if (root.has("fit_window")) {
    Section w = root.object("fit_window");
    const int first = w.integer("first");
    const int last = w.integer("last");
    w.finish();
    if (first < 0 || last < first) throw InvalidInput("config key 'fit_window': need 0 <= first <= last");
    window = nondeg::FitWindow{static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
  }
  root.finish();

  std::optional<nondeg::DriftField> field;
  if (table_mode) {
    const json t = read_json_file(table_path, "drift table");
    json echo;
    Section ts(t, echo, "table");
    const int d = ts.integer("dim_space");
    const int m = ts.integer("dim_velocity");
    nondeg::DriftTable table;
    table.values = ts.numbers("values");
    ts.has("axes");
    if (!t.contains("axes") || !t.at("axes").is_array())
      throw InvalidInput("config key 'table.axes': expected an array of arrays");
    for (std::size_t i = 0; i < t.at("axes").size(); ++i) {
      const json wrapped = {{"axis", t.at("axes")[i]}};
      json ax_echo;
      Section holder(wrapped, ax_echo, "table.axes");
      table.axes.push_back(holder.numbers("axis"));
    }
    for (auto it = t.begin(); it != t.end(); ++it)
      if (it.key() != "dim_space" && it.key() != "dim_velocity" && it.key() != "values" &&
          it.key() != "axes")
        throw InvalidInput("unknown config key 'table." + it.key() + "'");
    field = nondeg::DriftField::tabulated(d, m, std::move(table), K, L);
  } else {
    field = nondeg::DriftField::registered(drift_id, params, K, L);
  }

  const auto nus = nondeg::geometric_nus(nu_start, nu_ratio, nu_count);
  const auto curve = nondeg::omega_curve(*field, nus, sampling, Exec::Parallel);
  const auto est = window ? nondeg::fit_alpha(curve, *window) : nondeg::fit_alpha(curve);

  a.result = alpha_json(est);
  a.result["label"] = field->label();
  a.result["L_measure"] = curve.L_measure;
  a.result["K"] = box_json(field->K());
  a.result["L"] = box_json(field->L());
  if (est.degenerate) a.exit_code = kInfeasible;

  std::ostringstream csv;
  csv << "nu,omega\n";
  for (std::size_t i = 0; i < curve.nu_values.size(); ++i)
    csv << csv_number(curve.nu_values[i]) << ',' << csv_number(curve.omega_values[i]) << '\n';
  a.add("omega.csv", csv.str());

  if (rc.verify) {
    json checks = json::array();
    const auto serial = nondeg::omega_curve(*field, nus, sampling, Exec::Serial);
    record_check(a, checks, "serial_parallel_equal", serial.omega_values == curve.omega_values, 0.0);
    bool mono = true;
    double top = 0.0;
    for (std::size_t i = 0; i < curve.omega_values.size(); ++i) {
      if (i > 0 && curve.omega_values[i] > curve.omega_values[i - 1]) mono = false;
      top = std::max(top, curve.omega_values[i]);
    }
    record_check(a, checks, "omega_monotone_in_nu", mono, 0.0);
    record_check(a, checks, "omega_at_most_L_measure", top <= curve.L_measure * (1.0 + 1e-12),
                 top / curve.L_measure);
    a.result["verify"] = checks;
  }
}

// ---------------------------------------------------------------- lpa

lpa::GridFunction read_lpa_input(const fs::path& input, const std::string& format,
                                 const fs::path& sidecar, double csv_extent) {
  if (format == "csv") {
    std::ifstream in(input);
    if (!in) throw InvalidInput("cannot open input '" + input.string() + "'");
    std::vector<double> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos)
        throw InvalidInput("input line " + std::to_string(lineno) + ": expected 'index,value'");
      char* end = nullptr;
      const std::string idx_s = line.substr(0, comma);
      const long idx = std::strtol(idx_s.c_str(), &end, 10);
      if (end == idx_s.c_str()) {
        if (values.empty() && lineno == 1) continue;  // header
        throw InvalidInput("input line " + std::to_string(lineno) + ": bad index");
      }
      if (idx != static_cast<long>(values.size()))
        throw InvalidInput("input line " + std::to_string(lineno) + ": indices must run 0, 1, 2, ...");
      const std::string val_s = line.substr(comma + 1);
      const double v = std::strtod(val_s.c_str(), &end);
      if (end == val_s.c_str())
        throw InvalidInput("input line " + std::to_string(lineno) + ": bad value");
      values.push_back(v);
    }
    lpa::GridFunction g;
    g.dims = 1;
    g.n = values.size();
    g.extent = {csv_extent, 1.0};
    g.values = std::move(values);
    g.validate();
    return g;
  }
  if (format != "binary") throw InvalidInput("config key 'format': expected 'csv' or 'binary'");
  const json meta = read_json_file(sidecar, "sidecar");
  json echo;
  Section s(meta, echo, "sidecar");
  lpa::GridFunction g;
  g.dims = s.integer("dims");
  const int n = s.integer("n");
  if (n <= 0) throw InvalidInput("config key 'sidecar.n': must be positive");
  g.n = static_cast<std::size_t>(n);
  if (meta.contains("extent") && meta.at("extent").is_array()) {
    const auto e = s.numbers("extent");
    if (e.size() != static_cast<std::size_t>(g.dims))
      throw InvalidInput("config key 'sidecar.extent': expected one entry per axis");
    g.extent = {e[0], e.size() > 1 ? e[1] : 1.0};
  } else {
    const double e = s.number("extent", 1.0);
    g.extent = {e, e};
  }
  s.finish();
  if (g.dims != 1 && g.dims != 2) throw InvalidInput("config key 'sidecar.dims': must be 1 or 2");
  std::ifstream in(input, std::ios::binary);
  if (!in) throw InvalidInput("cannot open input '" + input.string() + "'");
  g.values.resize(g.size());
  in.read(reinterpret_cast<char*>(g.values.data()),
          static_cast<std::streamsize>(g.values.size() * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != g.values.size() * sizeof(double) || in.peek() != EOF)
    throw InvalidInput("input size does not match the sidecar shape");
  g.validate();
  return g;
}

void run_lpa(const RunConfig& rc, Section& root, Artifacts& a) {
  const std::string input_s = root.string("input");
  const fs::path input = resolve_relative(input_s, rc.config_path);
  const bool csv_ext = input.extension() == ".csv";
  const std::string format = root.string("format", csv_ext ? "csv" : "binary");
  const fs::path sidecar =
      resolve_relative(root.string("sidecar", input_s + ".json"), rc.config_path);
  const double extent = root.number("extent", 1.0);

  const auto& f = rc.lpa;
  // command-line flags override config keys; the echo records the value used
  double r = root.number("r", 2.0);
  int jmin = root.integer("jmin", 1);
  int jmax = root.integer("jmax", 0);
  std::optional<double> margin;
  if (root.has("window")) margin = root.number("window");
  std::optional<std::array<double, 2>> seminorm;
  if (root.has("seminorm")) {
    Section s = root.object("seminorm");
    seminorm = std::array<double, 2>{s.number("s"), s.number("q")};
    s.finish();
  }
  if (f.r) r = *f.r;
  if (f.jmin) jmin = *f.jmin;
  if (f.jmax) jmax = *f.jmax;
  if (f.window) margin = f.window;
  if (f.seminorm) seminorm = f.seminorm;
  root.finish();
  if (!(r >= 1.0)) throw InvalidInput("r must be >= 1");
  if (margin && !(*margin > 0.0 && *margin < 0.5)) throw InvalidInput("window margin must lie in (0, 0.5)");

  lpa::GridFunction u = read_lpa_input(input, format, sidecar, extent);
  if (margin) u = lpa::window(u, *margin);
  const int j_top = static_cast<int>(std::floor(lpa::nyquist_band(u)));
  if (j_top < 2) throw InvalidInput("grid too coarse: fewer than 3 Nyquist-safe bands");
  const lpa::DyadicFilterBank bank(j_top);
  const auto spec = lpa::dyadic_spectrum(u, bank, r, {jmin, jmax}, Exec::Parallel);

  a.result = spectrum_json(spec);
  a.result["cutoff_margin"] = number_or_null(margin);
  a.result["dims"] = u.dims;
  a.result["n"] = u.n;
  std::optional<lpa::GagliardoValue> gv;
  if (seminorm) {
    gv = lpa::gagliardo_seminorm(u, (*seminorm)[0], (*seminorm)[1], Exec::Parallel);
    a.result["seminorm"] = {{"s", (*seminorm)[0]},
                            {"q", (*seminorm)[1]},
                            {"integral", gv->integral},
                            {"seminorm", gv->seminorm}};
  }

  std::ostringstream csv;
  csv << "j,norm\n";
  for (std::size_t j = 0; j < spec.norms.size(); ++j) csv << j << ',' << csv_number(spec.norms[j]) << '\n';
  a.add("spectrum.csv", csv.str());

  if (rc.verify) {
    json checks = json::array();
    const double l2 = lpa::lr_norm(u, 2.0);
    double worst = 0.0;
    for (int j = 0; j <= j_top; ++j)
      worst = std::max(worst, lpa::lr_norm(lpa::apply_band(u, bank, j), 2.0) / std::max(l2, 1e-300));
    record_check(a, checks, "band_contraction", worst <= 1.0 + 1e-12, worst);
    const auto ab = lpa::apply_band(lpa::apply_band(u, bank, 1), bank, 2);
    const auto ba = lpa::apply_band(lpa::apply_band(u, bank, 2), bank, 1);
    double diff = 0.0;
    for (std::size_t i = 0; i < ab.values.size(); ++i)
      diff = std::max(diff, std::abs(ab.values[i] - ba.values[i]));
    record_check(a, checks, "band_commutation", diff <= 1e-12 * std::max(1.0, l2), diff);
    const auto serial = lpa::dyadic_spectrum(u, bank, r, {jmin, jmax}, Exec::Serial);
    record_check(a, checks, "serial_parallel_equal", serial.norms == spec.norms, 0.0);
    if (gv) {
      lpa::GridFunction shifted = u;
      if (u.dims == 1) {
        std::rotate(shifted.values.begin(), shifted.values.begin() + 1, shifted.values.end());
      } else {
        for (std::size_t i = 0; i < u.n; ++i)
          for (std::size_t k = 0; k < u.n; ++k)
            shifted.values[i * u.n + k] = u.values[((i + 1) % u.n) * u.n + (k + 3) % u.n];
      }
      const auto gs = lpa::gagliardo_seminorm(shifted, (*seminorm)[0], (*seminorm)[1], Exec::Parallel);
      const double rel = std::abs(gs.integral - gv->integral) / std::max(gv->integral, 1e-300);
      record_check(a, checks, "seminorm_translation_invariance", rel <= 1e-12, rel);
    }
    a.result["verify"] = checks;
  }
}

// ---------------------------------------------------------------- claw

claw::ClawProblem read_problem(Section& root) {
  claw::ClawProblem p;
  const std::string flux_id = root.string("flux", "burgers");
  const double amp = root.number("k_amplitude", 0.5);
  p.extent = root.number("extent", 1.0);
  p.T = root.number("T", 0.5);
  Section u0 = root.object("u0");
  p.u0.id = u0.string("id", "riemann");
  p.u0.params = u0.numbers("params", std::vector<double>{});
  u0.finish();
  if (!(p.extent > 0.0)) throw InvalidInput("config key 'extent': must be > 0");
  p.flux = claw::FluxSpec::from_id(flux_id, amp, p.extent);
  return p;
}

void run_claw_solve(const RunConfig& rc, Section& root, Artifacts& a) {
  const auto problem = read_problem(root);
  const int n_x = root.integer("n_x", 1024);
  const double cfl = root.number("cfl", 0.45);
  const int snapshots = root.integer("snapshots", 11);
  root.finish();
  if (n_x <= 0) throw InvalidInput("config key 'n_x': must be positive");
  if (snapshots < 2) throw InvalidInput("config key 'snapshots': must be >= 2");

  const auto f = claw::solve(problem, static_cast<std::size_t>(n_x), cfl, Exec::Parallel);
  const std::size_t ns = std::min<std::size_t>(static_cast<std::size_t>(snapshots), f.n_t);
  std::vector<double> times, data;
  for (std::size_t s = 0; s < ns; ++s) {
    const std::size_t t = (s * (f.n_t - 1) + (ns - 1) / 2) / (ns - 1);
    times.push_back(f.t0 + static_cast<double>(t) * f.dt);
    data.insert(data.end(), f.u.begin() + static_cast<std::ptrdiff_t>(t * f.n_x),
                f.u.begin() + static_cast<std::ptrdiff_t>((t + 1) * f.n_x));
  }
  std::string bin(data.size() * sizeof(double), '\0');
  std::memcpy(bin.data(), data.data(), bin.size());
  a.add("solution.f64", std::move(bin));
  const json sidecar = {{"dims", 2},
                        {"shape", {ns, f.n_x}},
                        {"layout", "row-major f64, axis 0 = snapshot, axis 1 = cell"},
                        {"times", times},
                        {"extent", f.extent},
                        {"dx", f.dx}};
  a.add("solution.json", json_out::dump(sidecar));

  a.result = {{"flux", problem.flux.id()},
              {"n_t", f.n_t},
              {"n_x", f.n_x},
              {"dt", f.dt},
              {"dx", f.dx},
              {"T", problem.T},
              {"cfl_used", f.cfl_used},
              {"mass_initial", f.mass(0)},
              {"mass_final", f.mass(f.n_t - 1)},
              {"max_abs", f.max_abs()}};

  if (rc.verify) {
    json checks = json::array();
    double drift = 0.0;
    for (std::size_t t = 1; t < f.n_t; ++t) drift = std::max(drift, std::abs(f.mass(t) - f.mass(t - 1)));
    const double scale = std::max(1.0, std::abs(f.mass(0)));
    record_check(a, checks, "mass_conservation_per_step", drift <= 1e-12 * scale, drift);
    record_check(a, checks, "cfl_at_most_one", f.cfl_used <= 1.0, f.cfl_used);
    std::vector<double> u0(f.u.begin(), f.u.begin() + static_cast<std::ptrdiff_t>(f.n_x));
    std::vector<double> ns_, np_, is_, ip_;
    claw::llf_step(problem.flux, f.dx, f.dt, u0, ns_, is_, Exec::Serial);
    claw::llf_step(problem.flux, f.dx, f.dt, u0, np_, ip_, Exec::Parallel);
    record_check(a, checks, "serial_parallel_step_equal", ns_ == np_, 0.0);
    if (problem.flux.amplitude == 0.0) {
      const auto [lo, hi] = std::minmax_element(u0.begin(), u0.end());
      double excess = 0.0;
      for (double v : f.u) excess = std::max({excess, *lo - v, v - *hi});
      record_check(a, checks, "max_principle", excess <= 1e-12, excess);
    }
    a.result["verify"] = checks;
  }
}

void run_claw_pipeline(const RunConfig& rc, Section& root, Artifacts& a) {
  const auto problem = read_problem(root);
  claw::PipelineConfig cfg;
  const int n_x = root.integer("n_x", static_cast<int>(cfg.n_x));
  cfg.cfl = root.number("cfl", cfg.cfl);
  const int n_lambda = root.integer("n_lambda", static_cast<int>(cfg.n_lambda));
  cfg.lambda_pad_frac = root.number("lambda_pad_frac", cfg.lambda_pad_frac);
  cfg.r_used = root.number("r_used", cfg.r_used);
  cfg.window_margin = root.number("window_margin", cfg.window_margin);
  cfg.jmin = root.integer("jmin", cfg.jmin);
  cfg.jmax = root.integer("jmax", cfg.jmax);
  cfg.tol = root.number("tol", cfg.tol);
  Section nd = root.object("nondeg");
  Section nu = nd.object("nu");
  cfg.nu_start = nu.number("start", cfg.nu_start);
  cfg.nu_ratio = nu.number("ratio", cfg.nu_ratio);
  cfg.nu_count = nu.integer("count", cfg.nu_count);
  nu.finish();
  cfg.sampling = read_sampling(nd.object("sampling"), cfg.sampling);
  nd.finish();
  root.finish();
  if (n_x <= 0 || n_lambda <= 0) throw InvalidInput("config keys 'n_x', 'n_lambda': must be positive");
  cfg.n_x = static_cast<std::size_t>(n_x);
  cfg.n_lambda = static_cast<std::size_t>(n_lambda);
  cfg.exec = Exec::Parallel;

  const auto rep = claw::pipeline_regularity(problem, cfg);
  const auto& w = rep.wellposedness;
  a.result = {{"applicable", rep.applicable},
              {"message", rep.message},
              {"flux", problem.flux.id()},
              {"wellposedness",
               {{"valid", w.valid},
                {"max_abs_a_extra_at_zero", w.max_abs_a_extra_at_zero},
                {"sup_a", w.sup_a},
                {"sup_a_extra", w.sup_a_extra},
                {"message", w.message}}},
              {"alpha", rep.alpha ? alpha_json(*rep.alpha) : json(nullptr)},
              {"prediction", rep.prediction ? exponent_json(*rep.prediction) : json(nullptr)},
              {"beta0_pred", rep.beta0_pred},
              {"r_used", rep.r_used},
              {"M", rep.M},
              {"spectrum_r", rep.spectrum_r ? spectrum_json(*rep.spectrum_r) : json(nullptr)},
              {"spectrum_2", rep.spectrum_2 ? spectrum_json(*rep.spectrum_2) : json(nullptr)},
              {"verdict", rep.verdict}};
  if (!rep.applicable) a.exit_code = kInfeasible;

  if (rep.spectrum_r && rep.spectrum_2) {
    std::ostringstream csv;
    csv << "j,norm_r,norm_2\n";
    const auto& nr = rep.spectrum_r->norms;
    const auto& n2 = rep.spectrum_2->norms;
    for (std::size_t j = 0; j < std::min(nr.size(), n2.size()); ++j)
      csv << j << ',' << csv_number(nr[j]) << ',' << csv_number(n2[j]) << '\n';
    a.add("spectra.csv", csv.str());
  }

  if (rc.verify && rep.applicable) {
    json checks = json::array();
    const auto f = claw::resample_time(claw::solve(problem, cfg.n_x, cfg.cfl, Exec::Parallel), cfg.n_x);
    const double pad = cfg.lambda_pad_frac * rep.M;
    const auto chi = claw::kinetic_chi(f, cfg.n_lambda, pad);
    const auto back =
        claw::velocity_average(chi, f, claw::RhoProfile{"plateau", {f.max_abs(), pad > 0.0 ? pad : 0.1}});
    double diff = 0.0;
    for (std::size_t i = 0; i < f.u.size(); ++i) diff = std::max(diff, std::abs(back.u[i] - f.u[i]));
    record_check(a, checks, "kinetic_identity_within_dlambda", diff <= chi.dlambda, diff);
    a.result["verify"] = checks;
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

int run(const RunConfig& rc, std::ostream& err) {
  Artifacts a;
  json resolved = json::object();
  std::uint64_t seed = 0;
  try {
    const json cfg = read_json_file(rc.config_path, "config");
    Section root(cfg, resolved, "");
    if (root.has("seed")) {
      const int s = root.integer("seed");
      if (s < 0) throw InvalidInput("config key 'seed': must be >= 0");
      seed = static_cast<std::uint64_t>(s);
    }
    if (rc.subcommand == "exponents")
      run_exponents(rc, root, a);
    else if (rc.subcommand == "nondeg")
      run_nondeg(rc, root, a);
    else if (rc.subcommand == "lpa")
      run_lpa(rc, root, a);
    else if (rc.subcommand == "claw solve")
      run_claw_solve(rc, root, a);
    else if (rc.subcommand == "claw pipeline")
      run_claw_pipeline(rc, root, a);
    else
      throw InvalidInput("unknown subcommand '" + rc.subcommand + "'");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }

  int code = a.exit_code;
  if (!a.failed_checks.empty()) {
    for (const auto& c : a.failed_checks) err << "verify: check '" << c << "' failed\n";
    code = kError;
  }
  a.add("result.json", json_out::dump(a.result));

  json flags = {{"verify", rc.verify}};
  if (rc.subcommand == "lpa") {
    const auto& f = rc.lpa;
    flags["r"] = number_or_null(f.r);
    flags["jmin"] = f.jmin ? json(*f.jmin) : json(nullptr);
    flags["jmax"] = f.jmax ? json(*f.jmax) : json(nullptr);
    flags["seminorm"] = f.seminorm ? json({(*f.seminorm)[0], (*f.seminorm)[1]}) : json(nullptr);
    flags["window"] = number_or_null(f.window);
  }
  json outputs = json::array();
  for (const auto& [name, content] : a.files) outputs.push_back({{"file", name}, {"bytes", content.size()}});
  const json manifest = {{"tool", "kinreg"},
                         {"version", kVersion},
                         {"subcommand", rc.subcommand},
                         {"config_path", rc.config_path.string()},
                         {"config", resolved},
                         {"seed", seed},
                         {"flags", flags},
                         {"outputs", outputs},
                         {"exit_code", code}};
  try {
    fs::create_directories(rc.out_dir);
    for (const auto& [name, content] : a.files) write_file(rc.out_dir / name, content);
    write_file(rc.out_dir / "manifest.json", json_out::dump(manifest));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }
  return code;
}

}  // namespace kinreg::cli
