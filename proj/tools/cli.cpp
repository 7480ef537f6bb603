#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "pplab/capacity.hpp"
#include "pplab/domains.hpp"
#include "pplab/errors.hpp"
#include "pplab/fundsol.hpp"
#include "pplab/operator.hpp"
#include "pplab/positivity.hpp"
#include "pplab/potential.hpp"
#include "pplab/regularity.hpp"

namespace pplab::cli {

using nlohmann::json;

namespace {

// Objects whose shape depends on a discriminator key; a file or flag value replaces them wholesale.
const std::vector<std::pair<std::string, std::string>> kTaggedObjects{
    {"operator", "preset"}, {"set", "type"}, {"domain", "type"}, {"source", "type"}, {"profile", "kind"}};

bool is_tagged(const std::string& key) {
  for (const auto& [k, tag] : kTaggedObjects)
    if (k == key) return true;
  return false;
}

json cg_defaults() { return {{"rel_tol", 1e-8}, {"max_iter", 20000}}; }

json operator_default(const std::string& preset, int m, int n) { return {{"preset", preset}, {"m", m}, {"n", n}}; }

json common(const std::string& command) {
  return {{"command", command}, {"output", "pplab-out"}, {"jobs", 0}, {"seed", 12345}, {"require_verdict", false}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

/// Rows of comma- or space-separated numbers; '#' lines and a non-numeric header are skipped.
std::vector<std::vector<double>> read_numeric_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof()) {
      if (rows.empty() && row.empty()) continue;  // header
      throw ConfigError(path + " line " + std::to_string(lineno) + ": expected numbers");
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

/// Recursive merge where null is an ordinary value (unlike RFC 7386).
void merge_into(json& target, const json& patch) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.value().is_object() && target.contains(it.key()) && target[it.key()].is_object())
      merge_into(target[it.key()], it.value());
    else
      target[it.key()] = it.value();
  }
}

void check_known(const json& patch, const json& schema, const std::string& prefix) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string path = prefix + "/" + it.key();
    if (!schema.contains(it.key())) throw ConfigError("unknown configuration key '" + path + "'");
    if (prefix.empty() && is_tagged(it.key())) continue;
    if (it.value().is_object() && schema[it.key()].is_object()) check_known(it.value(), schema[it.key()], path);
  }
}

template <class T>
T get(const json& c, const std::string& pointer) {
  const json::json_pointer p(pointer);
  if (!c.contains(p)) throw ConfigError("missing configuration key '" + pointer + "'");
  try {
    return c.at(p).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("configuration key '" + pointer + "' has the wrong type (got " + c.at(p).dump() + ")");
  }
}

bool is_null(const json& c, const std::string& pointer) {
  const json::json_pointer p(pointer);
  return !c.contains(p) || c.at(p).is_null();
}

double positive(const json& c, const std::string& pointer) {
  const double v = get<double>(c, pointer);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("configuration key '" + pointer + "' must be positive");
  return v;
}

CGOptions cg_options(const json& c) {
  CGOptions o;
  o.rel_tol = positive(c, "/cg/rel_tol");
  o.max_iter = get<int>(c, "/cg/max_iter");
  if (o.max_iter < 1) throw ConfigError("configuration key '/cg/max_iter' must be positive");
  return o;
}

EllipticOperator make_operator(const json& c) {
  const auto& j = c.at("operator");
  if (!j.is_object()) throw ConfigError("configuration key '/operator' must be an object");
  auto op = EllipticOperator::from_json(j);
  return op;
}

std::vector<double> vec(const json& j, const std::string& what) {
  try {
    return j.get<std::vector<double>>();
  } catch (const json::exception&) {
    throw ConfigError(what + " must be a list of numbers");
  }
}

/// Largest l-infinity reach of a set spec in length units (nodes for masks).
double set_reach(const json& s, double h) {
  const std::string type = s.at("type").get<std::string>();
  auto center_reach = [&]() {
    double r = 0.0;
    if (s.contains("center") && !s["center"].is_null())
      for (double v : vec(s["center"], "/set/center")) r = std::max(r, std::abs(v));
    return r;
  };
  auto size = [&](const char* key) {
    const double v = s.at(key).get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("set ") + key + " must be positive");
    return v;
  };
  if (type == "ball") return center_reach() + size("radius");
  if (type == "cube") return center_reach() + size("half_width");
  if (type == "shell") return s.at("outer").get<double>();
  if (type == "mask") {
    int r = 0;
    for (const auto& node : s.at("nodes"))
      for (int v : node.get<std::vector<int>>()) r = std::max(r, std::abs(v));
    return r * h;
  }
  if (type == "union") {
    double r = 0.0;
    for (const auto& p : s.at("parts")) r = std::max(r, set_reach(p, h));
    return r;
  }
  throw ConfigError("unknown set type '" + type + "' (expected ball, cube, shell, mask or union)");
}

Mask make_set(const Grid& g, const json& s) {
  const std::string type = s.at("type").get<std::string>();
  const auto n = static_cast<std::size_t>(g.dimension());
  auto center = [&]() {
    std::vector<double> c(n, 0.0);
    if (s.contains("center") && !s["center"].is_null()) c = vec(s["center"], "/set/center");
    if (c.size() != n) throw ConfigError("set center must have " + std::to_string(n) + " entries");
    return c;
  };
  if (type == "ball") return Mask::ball(g, s.at("radius").get<double>(), center());
  if (type == "cube") {
    const auto c = center();
    const double w = s.at("half_width").get<double>() * (1.0 + 1e-12);
    return Mask::from_predicate(g, [&](std::span<const double> x) {
      for (std::size_t i = 0; i < n; ++i)
        if (std::abs(x[i] - c[i]) > w) return false;
      return true;
    });
  }
  if (type == "shell") {
    const double lo = s.at("inner").get<double>(), hi = s.at("outer").get<double>();
    if (!(lo >= 0.0 && lo < hi)) throw ConfigError("shell needs 0 <= inner < outer");
    return Mask::from_predicate(g, [&](std::span<const double> x) {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      return r2 >= lo * lo * (1.0 - 1e-12) && r2 <= hi * hi * (1.0 + 1e-12);
    });
  }
  if (type == "mask") {
    Mask m(g);
    std::string text;
    for (const auto& node : s.at("nodes")) {
      const auto c = node.get<std::vector<int>>();
      for (std::size_t i = 0; i < c.size(); ++i) text += (i ? "," : "") + std::to_string(c[i]);
      text += '\n';
    }
    return Mask::from_csv(g, text);
  }
  if (type == "union") {
    Mask m(g);
    for (const auto& p : s.at("parts")) m = m | make_set(g, p);
    return m;
  }
  throw ConfigError("unknown set type '" + type + "' (expected ball, cube, shell, mask or union)");
}

Grid make_grid(const json& c, int n, double reach_factor, double reach) {
  const double h = positive(c, "/grid/h");
  int extent;
  if (is_null(c, "/grid/extent")) {
    extent = static_cast<int>(std::ceil(reach_factor * reach / h - 1e-9));
  } else {
    extent = get<int>(c, "/grid/extent");
  }
  return Grid(n, h, extent);
}

std::string channels_csv(const PositivityVerdict& v) {
  std::ostringstream os;
  os.precision(17);
  os << "k,quotient,quotient_refined,window,points,doublings\n";
  for (const auto& ch : v.channels)
    os << ch.k << ',' << ch.quotient << ',' << ch.quotient_refined << ',' << ch.window << ',' << ch.points << ','
       << ch.doublings << '\n';
  return os.str();
}

SeriesOptions series_options(const json& c, const std::string& base) {
  SeriesOptions o;
  o.j_min = get<int>(c, base + "/j_min");
  o.j_max = get<int>(c, base + "/j_max");
  o.nodes_per_rho = get<int>(c, base + "/nodes_per_rho");
  o.box_factor = positive(c, base + "/box_factor");
  o.cg = cg_options(c);
  return o;
}

WienerThresholds thresholds(const json& c) {
  WienerThresholds t;
  t.slope_min = get<double>(c, "/thresholds/slope_min");
  t.flat_ratio = get<double>(c, "/thresholds/flat_ratio");
  t.tail_ratio = get<double>(c, "/thresholds/tail_ratio");
  t.power_max = get<double>(c, "/thresholds/power_max");
  t.power_min = get<double>(c, "/thresholds/power_min");
  t.min_scales = get<int>(c, "/thresholds/min_scales");
  return t;
}

json threshold_defaults() {
  const WienerThresholds t;
  return {{"slope_min", t.slope_min}, {"flat_ratio", t.flat_ratio}, {"tail_ratio", t.tail_ratio},
          {"power_max", t.power_max}, {"power_min", t.power_min},   {"min_scales", t.min_scales}};
}

std::string agreement(Classification a, Classification b) {
  if (a == Classification::inconclusive || b == Classification::inconclusive) return "inconclusive";
  return a == b ? "agree" : "contradiction";
}

int verdict_exit(const json& c, bool inconclusive) {
  return inconclusive && get<bool>(c, "/require_verdict") ? exit_inconclusive : exit_ok;
}

RunResult run_symbol_check(const json& c) {
  const auto op = make_operator(c);
  const int samples = get<int>(c, "/samples");
  if (samples < 1) throw ConfigError("configuration key '/samples' must be positive");
  RunResult r;
  const auto e = check_ellipticity(op, samples);
  r.summary = {{"operator", op.to_json()},
               {"elliptic", e.elliptic},
               {"min_value", e.min_value},
               {"worst_direction", e.worst_direction},
               {"samples", e.samples}};
  if (!is_null(c, "/xi")) {
    const auto xi = vec(c.at("xi"), "/xi");
    r.summary["xi"] = xi;
    r.summary["symbol"] = op.symbol(xi);
  }
  const int nodes = get<int>(c, "/probe_nodes");
  if (nodes > 0) {
    std::mt19937_64 rng(get<std::uint64_t>(c, "/seed"));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double radius = positive(c, "/probe_radius");
    std::vector<KernelNode> kn(static_cast<std::size_t>(nodes));
    std::ostringstream os;
    os.precision(17);
    for (int k = 0; k < op.dimension(); ++k) os << "xi" << k << ',';
    os << "weight\n";
    for (auto& node : kn) {
      node.xi.resize(static_cast<std::size_t>(op.dimension()));
      for (auto& v : node.xi) v = radius * unit(rng);
      node.weight = unit(rng);
      for (double v : node.xi) os << v << ',';
      os << node.weight << '\n';
    }
    const double value = fourier_kernel_probe(op, kn);
    r.summary["kernel_probe"] = {{"nodes", nodes}, {"value", value}, {"negative_witness", value < 0.0}};
    r.artifacts.push_back({"kernel_nodes.csv", os.str()});
  }
  return r;
}

RunResult run_fundsol(const json& c) {
  const auto op = make_operator(c);
  ProfileOptions o;
  o.directions = get<int>(c, "/directions");
  o.sphere_nodes = get<int>(c, "/sphere_nodes");
  o.radial_nodes = get<int>(c, "/radial_nodes");
  o.contour_nodes = get<int>(c, "/contour_nodes");
  o.contour_radius = positive(c, "/contour_radius");
  o.estimate_error = get<bool>(c, "/estimate_error");
  const auto profile = compute_profile(op, o);
  RunResult r;
  r.summary = profile_summary_json(profile);
  r.summary["operator"] = op.to_json();
  r.artifacts.push_back({"profile.csv", profile_csv(profile)});
  return r;
}

RunResult run_capacity(const json& c) {
  const auto op = make_operator(c);
  const double h = positive(c, "/grid/h");
  const auto grid = make_grid(c, op.dimension(), 4.0, set_reach(c.at("set"), h));
  const Mask K = make_set(grid, c.at("set"));
  CapacityOptions o;
  o.cg = cg_options(c);
  o.extrapolate_box = get<bool>(c, "/extrapolate_box");
  o.estimate_refinement = get<bool>(c, "/estimate_refinement");
  const std::string kind = get<std::string>(c, "/kind");
  CapacityValue v;
  if (kind == "homogeneous")
    v = cap_m(K, op.half_order(), o);
  else if (kind == "inhomogeneous")
    v = bessel_capacity(K, op.half_order(), o);
  else
    throw ConfigError("configuration key '/kind' must be homogeneous or inhomogeneous");
  RunResult r;
  r.summary = v.to_json();
  r.summary["nodes_in_set"] = K.count();
  r.summary["m"] = op.half_order();
  r.summary["n"] = op.dimension();
  r.artifacts.push_back({"set.csv", K.to_csv()});
  return r;
}

/// Points at 1.5, 2 and 2.5 times the reach of K along x_1, plus one diagonal point.
std::vector<std::vector<double>> default_probes(int n, double reach) {
  std::vector<std::vector<double>> p;
  for (double t : {1.5, 2.0, 2.5}) {
    std::vector<double> y(static_cast<std::size_t>(n), 0.0);
    y[0] = t * reach;
    p.push_back(y);
  }
  if (n > 1) {
    std::vector<double> d(static_cast<std::size_t>(n), 0.0);
    d[0] = d[1] = 2.0 * reach / std::sqrt(2.0);
    p.push_back(d);
  }
  return p;
}

std::vector<std::vector<double>> probes(const json& c, const std::string& pointer, int n, double reach) {
  if (is_null(c, pointer)) return default_probes(n, reach);
  std::vector<std::vector<double>> out;
  for (const auto& y : c.at(json::json_pointer(pointer))) {
    out.push_back(vec(y, pointer));
    if (out.back().size() != static_cast<std::size_t>(n))
      throw ConfigError("every probe in '" + pointer + "' must have " + std::to_string(n) + " coordinates");
  }
  return out;
}

RunResult run_potential(const json& c) {
  const auto op = make_operator(c);
  const int n = op.dimension(), m = op.half_order();
  const auto& set = c.at("set");
  const std::string method = get<std::string>(c, "/method");
  RunResult r;
  if (method == "radial") {
    if (!op.is_polyharmonic()) throw UnsupportedRegime("radial potential requires a polyharmonic operator");
    if (set.at("type") != "ball" || (set.contains("center") && !set["center"].is_null()))
      throw ConfigError("radial potential requires a ball set centred at the origin");
    const auto u = radial_ball_potential(m, n, set.at("radius").get<double>());
    const auto rc = range_check(u, 64.0, 4096, get<double>(c, "/range_tol"));
    r.summary = {{"method", "radial"}, {"potential", u.to_json()}, {"range", rc.to_json()}};
    std::ostringstream os;
    os.precision(17);
    os << "r,U\n";
    for (int i = 0; i <= 256; ++i) {
      const double rr = u.radius * std::pow(64.0, i / 256.0);
      os << rr << ',' << u.value(rr) << '\n';
    }
    r.artifacts.push_back({"radial.csv", os.str()});
    return r;
  }
  if (method != "grid") throw ConfigError("configuration key '/method' must be grid or radial");
  const double h = positive(c, "/grid/h");
  const double reach = set_reach(set, h);
  const auto grid = make_grid(c, n, 6.0, reach);
  const Mask K = make_set(grid, set);
  PotentialOptions o;
  o.cg = cg_options(c);
  o.box_correction = get<bool>(c, "/box_correction");

  std::vector<int> orders = get<std::vector<int>>(c, "/gradient/orders");
  const auto gprobes = probes(c, "/gradient/probes", n, reach);
  const double d = is_null(c, "/lower_bound/d") ? K.max_radius() : positive(c, "/lower_bound/d");
  const auto lprobes = probes(c, "/lower_bound/probes", n, reach);
  const bool maximal = !is_null(c, "/maximal/rho");
  const bool signs = get<bool>(c, "/sign_probe");

  const auto rep = capacitary_potential(op, K, o);
  r.summary = {{"method", "grid"}, {"report", rep.to_json()}};
  r.summary["range"] = range_check(rep, get<double>(c, "/range_tol")).to_json();
  r.summary["gradient_decay"] = gradient_decay_check(rep, orders, gprobes).to_json();
  r.summary["lower_bound"] = lower_bound_check(rep, d, lprobes).to_json();
  if (maximal) {
    const auto ml = get<std::vector<int>>(c, "/maximal/orders");
    r.summary["maximal_bound"] =
        maximal_bound_check(rep, positive(c, "/maximal/rho"), positive(c, "/maximal/theta"), ml).to_json();
  }
  if (signs) r.summary["sign_probe"] = sign_probe(op, sign_candidates(grid), 1e-9, o.cg).to_json();
  if (get<bool>(c, "/export_field")) r.artifacts.push_back({"potential.csv", rep.U.to_csv()});
  return r;
}

RunResult run_positivity(const json& c) {
  const auto op = make_operator(c);
  std::string method = is_null(c, "/method") ? (op.is_polyharmonic() ? "channel" : "grid") : get<std::string>(c, "/method");
  PositivityVerdict v;
  if (method == "channel") {
    if (!op.is_polyharmonic()) throw UnsupportedRegime("channel positivity requires a polyharmonic operator; use method grid");
    ChannelOptions o;
    o.k_max = get<int>(c, "/channels/k_max");
    o.dt = positive(c, "/channels/dt");
    o.window = positive(c, "/channels/window");
    o.max_window = positive(c, "/channels/max_window");
    o.stability = positive(c, "/channels/stability");
    o.epsilon = positive(c, "/channels/epsilon");
    v = channel_positivity(op.half_order(), op.dimension(), o);
  } else if (method == "grid") {
    const Grid grid(op.dimension(), positive(c, "/grid/h"), get<int>(c, "/grid/extent"));
    if (op.dimension() > 5) throw UnsupportedRegime("grid positivity supports n <= 5; use method channel");
    const double scale = get<double>(c, "/weight_scale");
    SphereProfile profile = op.is_polyharmonic() ? SphereProfile::isotropic(op.half_order(), op.dimension())
                                                  : compute_profile(op, grid_directions(grid));
    if (scale != 1.0) profile = profile.scaled(scale);
    GridPositivityOptions o;
    o.eigen.max_iter = get<int>(c, "/eigen/max_iter");
    o.eigen.rel_tol = positive(c, "/eigen/rel_tol");
    o.eigen.seed = get<std::uint64_t>(c, "/seed");
    o.refine = get<bool>(c, "/refine");
    v = grid_positivity(op, grid, profile, o);
  } else {
    throw ConfigError("configuration key '/method' must be channel or grid");
  }
  RunResult r;
  r.summary = v.to_json();
  r.artifacts.push_back({"channels.csv", channels_csv(v)});
  if (v.status == PositivityStatus::violated) r.artifacts.push_back({"witness.csv", v.witness_csv()});
  return r;
}

RunResult run_wiener(const json& c) {
  const auto op = make_operator(c);
  const int n = op.dimension(), m = op.half_order();
  const auto shape = shape_from_json(c.at("domain"), n);
  const auto so = series_options(c, "/scales");
  const auto t = thresholds(c);
  const auto series = annulus_series(*shape, m, n, so);
  const auto w = wiener_classify(series, t);
  RunResult r;
  r.summary = {{"operator", op.to_json()}, {"domain", shape->to_json()}, {"verdict", w.to_json()}};
  if (const auto* cusp = dynamic_cast<const CuspComplement*>(shape.get()); cusp && n > 2 * m) {
    const auto cv = cusp_criterion(cusp->profile(), m, n);
    r.summary["cusp_criterion"] = cv.to_json();
    r.summary["agreement"] = agreement(w.classification, cv.classification);
  }
  r.artifacts.push_back({"series.csv", series.csv()});
  r.exit_code = verdict_exit(c, w.classification == Classification::inconclusive);
  return r;
}

RunResult run_cusp(const json& c) {
  const int m = get<int>(c, "/m"), n = get<int>(c, "/n");
  if (m < 1 || n < 1) throw ConfigError("'/m' and '/n' must be positive");
  const auto f = CuspProfile::from_json(c.at("profile"));
  const std::string method = get<std::string>(c, "/method");
  CuspVerdict v;
  if (method == "closed_form")
    v = cusp_criterion(f, m, n);
  else if (method == "quadrature")
    v = cusp_criterion_quadrature(f, m, n);
  else
    throw ConfigError("configuration key '/method' must be closed_form or quadrature");
  RunResult r;
  r.summary = v.to_json();
  r.summary["profile"] = f.to_json();
  r.summary["m"] = m;
  r.summary["n"] = n;
  if (!v.eps.empty()) {
    std::ostringstream os;
    os.precision(17);
    os << "eps,partial\n";
    for (std::size_t i = 0; i < v.eps.size(); ++i) os << v.eps[i] << ',' << v.partial[i] << '\n';
    r.artifacts.push_back({"partial.csv", os.str()});
  }
  r.exit_code = verdict_exit(c, v.classification == Classification::inconclusive);
  return r;
}

SourceFunction make_source(const json& s, int n) {
  const std::string type = s.at("type").get<std::string>();
  if (type == "shell") return shell_source(s.value("radius", 0.5), s.value("width", 0.15));
  if (type == "bump") {
    auto center = vec(s.at("center"), "/source/center");
    if (center.size() != static_cast<std::size_t>(n)) throw ConfigError("source center has the wrong dimension");
    const double radius = s.at("radius").get<double>();
    const int power = s.value("power", 4);
    if (!(radius > 0.0)) throw ConfigError("source radius must be positive");
    return [center, radius, power](std::span<const double> x) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - center[i]) * (x[i] - center[i]);
      const double t = 1.0 - d2 / (radius * radius);
      return t > 0.0 ? std::pow(t, power) : 0.0;
    };
  }
  throw ConfigError("unknown source type '" + type + "' (expected shell or bump)");
}

RunResult run_dirichlet(const json& c) {
  const auto op = make_operator(c);
  const int n = op.dimension(), m = op.half_order();
  const auto shape = shape_from_json(c.at("domain"), n);
  const auto f = make_source(c.at("source"), n);
  const double L = positive(c, "/domain_radius");
  const std::string mode = get<std::string>(c, "/mode");
  RunResult r;
  if (mode == "solve") {
    const double h = positive(c, "/grid/h");
    const Grid grid(n, h, static_cast<int>(std::ceil(L / h - 1e-9)));
    const Mask omega = domain_mask(grid, *shape, L);
    const auto fv = GridFunction::from_function(grid, f);
    const auto s = dirichlet_solve(op, omega, fv, cg_options(c));
    r.summary = {{"mode", "solve"},
                 {"grid", grid.to_json()},
                 {"domain", shape->to_json()},
                 {"nodes_in_domain", omega.count()},
                 {"u_max", s.u.max_abs()},
                 {"cg", {{"iterations", s.cg.iterations}, {"relative_residual", s.cg.relative_residual}, {"converged", s.cg.converged}}}};
    r.artifacts.push_back({"solution.csv", s.u.to_csv(true)});
    return r;
  }
  if (mode != "probe") throw ConfigError("configuration key '/mode' must be probe or solve");
  ProbeOptions o;
  o.spacings = get<std::vector<double>>(c, "/spacings");
  o.radii = get<std::vector<double>>(c, "/radii");
  o.domain_radius = L;
  o.vanish_ratio = positive(c, "/vanish_ratio");
  o.stable_change = positive(c, "/stable_change");
  o.floor = positive(c, "/floor");
  o.cg = cg_options(c);
  const bool label = get<bool>(c, "/wiener/enabled");
  const auto so = label ? series_options(c, "/wiener") : SeriesOptions{};
  auto p = regularity_probe(op, *shape, f, o);
  if (label) {
    if (n >= 2 * m) {
      const auto w = wiener_classify(annulus_series(*shape, m, n, so));
      p.wiener_label = to_string(w.classification);
    } else {
      p.wiener_label = "unsupported";
    }
  }
  r.summary = p.to_json();
  r.summary["domain"] = shape->to_json();
  r.summary["operator"] = op.to_json();
  r.artifacts.push_back({"probe.csv", p.csv()});
  r.exit_code = verdict_exit(c, p.trend == Trend::inconclusive);
  return r;
}

RunResult run_decay(const json& c) {
  const auto op = make_operator(c);
  const int n = op.dimension();
  const auto shape = shape_from_json(c.at("domain"), n);
  DecayOptions o;
  o.R = positive(c, "/R");
  o.radii = get<std::vector<double>>(c, "/radii");
  o.domain_radius = positive(c, "/domain_radius");
  o.series = series_options(c, "/scales");
  o.cg = cg_options(c);
  const double h = positive(c, "/grid/h");
  const int extent =
      is_null(c, "/grid/extent") ? static_cast<int>(std::ceil(o.domain_radius / h - 1e-9)) : get<int>(c, "/grid/extent");
  const bool refine = get<bool>(c, "/refine");
  const double tol = positive(c, "/stability");
  const auto rep = decay_check(op, *shape, Grid(n, h, extent), o);
  RunResult r;
  r.summary = {{"report", rep.to_json()}};
  r.artifacts.push_back({"decay.csv", rep.csv()});
  bool pass = rep.fitted && rep.c2 > 0.0;
  if (refine) {
    const auto fine = decay_check(op, *shape, Grid(n, h / 2, 2 * extent), o);
    const double change = rep.c2 != 0.0 ? std::abs(fine.c2 - rep.c2) / std::abs(rep.c2) : std::numeric_limits<double>::infinity();
    pass = pass && fine.fitted && fine.c2 > 0.0 && change <= tol;
    r.summary["refined"] = fine.to_json();
    r.summary["c2_relative_change"] = change;
    r.artifacts.push_back({"decay_refined.csv", fine.csv()});
  }
  r.summary["pass"] = pass;
  r.exit_code = verdict_exit(c, !rep.fitted);
  return r;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"symbol-check", "fundsol", "capacity", "potential", "positivity",
                                              "wiener",       "cusp",    "dirichlet", "decay"};
  return names;
}

json defaults(const std::string& command) {
  json d = common(command);
  d["cg"] = cg_defaults();
  d["operator_file"] = nullptr;
  if (command == "symbol-check") {
    d["operator"] = operator_default("laplacian", 1, 3);
    d["samples"] = 1000;
    d["xi"] = nullptr;
    d["probe_nodes"] = 0;
    d["probe_radius"] = 1.0;
  } else if (command == "fundsol") {
    const ProfileOptions o;
    d["operator"] = operator_default("laplacian", 1, 3);
    d["directions"] = o.directions;
    d["sphere_nodes"] = o.sphere_nodes;
    d["radial_nodes"] = o.radial_nodes;
    d["contour_nodes"] = o.contour_nodes;
    d["contour_radius"] = o.contour_radius;
    d["estimate_error"] = o.estimate_error;
  } else if (command == "capacity") {
    d["operator"] = operator_default("laplacian", 1, 3);
    d["kind"] = "homogeneous";
    d["grid"] = {{"h", 0.1}, {"extent", nullptr}};
    d["set"] = {{"type", "ball"}, {"radius", 1.0}, {"center", nullptr}};
    d["extrapolate_box"] = true;
    d["estimate_refinement"] = true;
  } else if (command == "potential") {
    d["operator"] = operator_default("laplacian", 1, 3);
    d["method"] = "grid";
    d["grid"] = {{"h", 0.2}, {"extent", nullptr}};
    d["set"] = {{"type", "ball"}, {"radius", 1.0}, {"center", nullptr}};
    d["box_correction"] = true;
    d["range_tol"] = 1e-6;
    d["gradient"] = {{"orders", {0, 1, 2}}, {"probes", nullptr}};
    d["lower_bound"] = {{"d", nullptr}, {"probes", nullptr}};
    d["maximal"] = {{"rho", nullptr}, {"theta", 0.5}, {"orders", {0}}};
    d["sign_probe"] = false;
    d["export_field"] = false;
  } else if (command == "positivity") {
    const ChannelOptions ch;
    const GridPositivityOptions g;
    d["operator"] = operator_default("polyharmonic", 2, 5);
    d["method"] = nullptr;
    d["channels"] = {{"k_max", ch.k_max},   {"dt", ch.dt},           {"window", ch.window},
                     {"max_window", ch.max_window}, {"stability", ch.stability}, {"epsilon", ch.epsilon}};
    d["grid"] = {{"h", 0.25}, {"extent", 4}};
    d["refine"] = g.refine;
    d["weight_scale"] = 1.0;
    d["eigen"] = {{"max_iter", g.eigen.max_iter}, {"rel_tol", g.eigen.rel_tol}};
  } else if (command == "wiener") {
    d["operator"] = operator_default("laplacian", 1, 3);
    d["domain"] = {{"type", "cone"}, {"half_aperture", std::numbers::pi / 4}};
    d["scales"] = {{"j_min", 1}, {"j_max", 8}, {"nodes_per_rho", 4}, {"box_factor", 2.0}};
    d["thresholds"] = threshold_defaults();
  } else if (command == "cusp") {
    d.erase("cg");
    d.erase("operator_file");
    d["m"] = 1;
    d["n"] = 3;
    d["profile"] = {{"kind", "power"}, {"p", 2.0}};
    d["method"] = "closed_form";
  } else if (command == "dirichlet") {
    const ProbeOptions o;
    d["operator"] = operator_default("laplacian", 1, 3);
    d["mode"] = "probe";
    d["domain"] = {{"type", "cone"}, {"half_aperture", std::numbers::pi / 4}};
    d["source"] = {{"type", "shell"}, {"radius", 0.5}, {"width", 0.15}};
    d["domain_radius"] = o.domain_radius;
    d["spacings"] = o.spacings;
    d["radii"] = o.radii;
    d["vanish_ratio"] = o.vanish_ratio;
    d["stable_change"] = o.stable_change;
    d["floor"] = o.floor;
    d["grid"] = {{"h", 1.0 / 16}};
    d["wiener"] = {{"enabled", true}, {"j_min", 1}, {"j_max", 8}, {"nodes_per_rho", 4}, {"box_factor", 2.0}};
  } else if (command == "decay") {
    const DecayOptions o;
    d["operator"] = operator_default("laplacian", 1, 3);
    d["domain"] = {{"type", "cone"}, {"half_aperture", std::numbers::pi / 4}};
    d["grid"] = {{"h", 1.0 / 32}, {"extent", nullptr}};
    d["R"] = o.R;
    d["radii"] = o.radii;
    d["domain_radius"] = o.domain_radius;
    d["scales"] = {{"j_min", 1}, {"j_max", 10}, {"nodes_per_rho", 8}, {"box_factor", 2.0}};
    d["refine"] = true;
    d["stability"] = 0.3;
  } else {
    throw ConfigError("unknown subcommand '" + command + "'");
  }
  return d;
}

json resolve(const std::string& command, const json& file, const json& overrides) {
  json cfg = defaults(command);
  if (!file.is_null() && !file.is_object()) throw ConfigError("configuration file must hold a JSON object");
  const json f = file.is_null() ? json::object() : file;
  if (f.contains("command") && f["command"] != command)
    throw ConfigError("configuration file is for '" + f["command"].get<std::string>() + "', not '" + command + "'");
  check_known(f, cfg, "");
  check_known(overrides, cfg, "");

  for (const auto* patch : {&f, &overrides}) {
    json rest = *patch;
    for (const auto& [key, tag] : kTaggedObjects) {
      if (!rest.contains(key)) continue;
      const json& v = rest[key];
      if (!v.is_object()) throw ConfigError("configuration key '/" + key + "' must be an object");
      if (patch == &f || v.contains(tag) || (key == "operator" && v.contains("terms")))
        cfg[key] = v;
      else
        merge_into(cfg[key], v);
      rest.erase(key);
    }
    merge_into(cfg, rest);
  }
  cfg["command"] = command;

  // Inline referenced files so the manifest alone reproduces the run.
  if (cfg.contains("operator_file") && !cfg["operator_file"].is_null()) {
    cfg["operator"] = parse_json_file(get<std::string>(cfg, "/operator_file"));
    cfg["operator_file"] = nullptr;
  }
  if (cfg.contains("set") && cfg["set"].value("type", "") == "mask" && cfg["set"].contains("path")) {
    json nodes = json::array();
    for (const auto& row : read_numeric_csv(cfg["set"]["path"].get<std::string>())) {
      std::vector<int> c;
      for (double v : row) c.push_back(static_cast<int>(std::lround(v)));
      nodes.push_back(c);
    }
    cfg["set"] = {{"type", "mask"}, {"nodes", nodes}};
  }
  if (cfg.contains("profile") && cfg["profile"].contains("table")) {
    std::vector<double> tau, fv;
    for (const auto& row : read_numeric_csv(cfg["profile"]["table"].get<std::string>())) {
      if (row.size() != 2) throw ConfigError("cusp table rows must be 'tau,f'");
      tau.push_back(row[0]);
      fv.push_back(row[1]);
    }
    cfg["profile"] = {{"kind", "tabulated"}, {"tau", tau}, {"f", fv}};
  }

  if (get<int>(cfg, "/jobs") < 0) throw ConfigError("configuration key '/jobs' must be >= 0");
  get<std::uint64_t>(cfg, "/seed");
  get<bool>(cfg, "/require_verdict");
  get<std::string>(cfg, "/output");
  return cfg;
}

RunResult execute(const json& config) {
  RunResult r;
  try {
    const std::string command = get<std::string>(config, "/command");
    if (const int jobs = get<int>(config, "/jobs"); jobs > 0) omp_set_num_threads(jobs);
    if (command == "symbol-check") r = run_symbol_check(config);
    else if (command == "fundsol") r = run_fundsol(config);
    else if (command == "capacity") r = run_capacity(config);
    else if (command == "potential") r = run_potential(config);
    else if (command == "positivity") r = run_positivity(config);
    else if (command == "wiener") r = run_wiener(config);
    else if (command == "cusp") r = run_cusp(config);
    else if (command == "dirichlet") r = run_dirichlet(config);
    else if (command == "decay") r = run_decay(config);
    else throw ConfigError("unknown subcommand '" + command + "'");
    if (r.exit_code == exit_inconclusive) r.message = "verdict required but the result is inconclusive";
  } catch (const UnsupportedRegime& e) {
    r = {exit_unsupported, {{"error", "unsupported_regime"}, {"message", e.what()}}, {}, e.what()};
  } catch (const InputError& e) {
    r = {exit_validation, {{"error", "input"}, {"message", e.what()}}, {}, e.what()};
  } catch (const ConfigError& e) {
    r = {exit_validation, {{"error", "config"}, {"message", e.what()}}, {}, e.what()};
  } catch (const json::exception& e) {
    r = {exit_validation, {{"error", "config"}, {"message", e.what()}}, {}, e.what()};
  } catch (const std::exception& e) {
    r = {exit_internal, {{"error", "internal"}, {"message", e.what()}}, {}, e.what()};
  }
  r.summary["exit_code"] = r.exit_code;
  return r;
}

void write_outputs(const json& config, const RunResult& result) {
  const std::filesystem::path dir = get<std::string>(config, "/output");
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + (dir / name).string() + "'");
    out << content;
  };
  write("manifest.json", config.dump(2) + "\n");
  write(get<std::string>(config, "/command") + ".json", result.summary.dump(2) + "\n");
  for (const auto& a : result.artifacts) write(a.name, a.content);
}

namespace {

struct Overrides {
  json values = json::object();

  template <class T>
  void option(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help) {
    app->add_option_function<T>(
        flag, [this, pointer](const T& v) { values[json::json_pointer(pointer)] = v; }, help);
  }
  void flag(CLI::App* app, const std::string& flag, const std::string& pointer, const json& value,
            const std::string& help) {
    app->add_flag_function(
        flag, [this, pointer, value](std::int64_t) { values[json::json_pointer(pointer)] = value; }, help);
  }
};

void add_operator_flags(CLI::App* s, Overrides& o) {
  o.option<std::string>(s, "--preset", "/operator/preset", "operator preset: laplacian, polyharmonic or mn8");
  o.flag(s, "--laplacian", "/operator/preset", "laplacian", "shorthand for --preset laplacian");
  o.flag(s, "--polyharmonic", "/operator/preset", "polyharmonic", "shorthand for --preset polyharmonic");
  o.flag(s, "--mn8", "/operator/preset", "mn8", "shorthand for --preset mn8");
  o.option<int>(s, "--m", "/operator/m", "half order m");
  o.option<int>(s, "--n", "/operator/n", "dimension n");
  o.option<std::string>(s, "--operator-file", "/operator_file", "operator description (JSON: n, m, terms)");
}

void add_domain_flags(CLI::App* s, Overrides& o) {
  o.option<std::string>(s, "--domain", "/domain/type", "complement near O: cone, ray, empty or cusp");
  o.option<double>(s, "--aperture", "/domain/half_aperture", "cone half aperture (radians)");
  o.option<std::string>(s, "--cusp-kind", "/domain/profile/kind", "cusp profile kind: power or exponential");
  o.option<double>(s, "--cusp-p", "/domain/profile/p", "power cusp exponent");
  o.option<double>(s, "--cusp-a", "/domain/profile/a", "exponential cusp parameter");
}

void add_set_flags(CLI::App* s, Overrides& o) {
  s->add_option_function<double>(
      "--ball", [&o](const double& r) { o.values["set"] = {{"type", "ball"}, {"radius", r}}; }, "K = ball of radius r");
  s->add_option_function<double>(
      "--cube", [&o](const double& w) { o.values["set"] = {{"type", "cube"}, {"half_width", w}}; },
      "K = cube of half width w");
  s->add_option_function<std::string>(
      "--mask", [&o](const std::string& p) { o.values["set"] = {{"type", "mask"}, {"path", p}}; },
      "K from a node-list CSV (integer grid coordinates)");
  o.option<double>(s, "--h", "/grid/h", "grid spacing");
  o.option<int>(s, "--extent", "/grid/extent", "grid extent in nodes per half axis");
}

}  // namespace

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pplab: polyharmonic capacity, positivity and boundary-regularity experiments"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help and exit");
  Overrides ov;
  std::string config_path;
  std::map<std::string, CLI::App*> subs;

  const std::map<std::string, std::string> about{
      {"symbol-check", "symbol, ellipticity and Fourier kernel probe of an operator"},
      {"fundsol", "fundamental solution profile on the unit sphere"},
      {"capacity", "m-harmonic or Bessel-type capacity of a compact set"},
      {"potential", "capacitary potential, range and pointwise ratio checks"},
      {"positivity", "weighted positivity by channel reduction or on a grid"},
      {"wiener", "annulus capacity series and Wiener-type classification"},
      {"cusp", "cusp integral criterion for a profile"},
      {"dirichlet", "regularity probe or single Dirichlet solve near a boundary point"},
      {"decay", "decay estimate near the boundary point"},
  };
  for (const auto& name : subcommands()) {
    auto* s = app.add_subcommand(name, about.at(name));
    s->set_help_flag("--help", "print this help and exit");
    subs[name] = s;
    s->add_option("--config", config_path, "JSON run configuration (flags override its values)");
    ov.option<std::string>(s, "--out", "/output", "output directory");
    ov.option<int>(s, "--jobs", "/jobs", "worker threads (0: OpenMP default)");
    ov.option<std::uint64_t>(s, "--seed", "/seed", "seed for randomized probes and eigen iterations");
    ov.flag(s, "--require-verdict", "/require_verdict", true, "exit 4 when the result is inconclusive");
    if (name != "cusp") add_operator_flags(s, ov);
  }
  ov.option<int>(subs["symbol-check"], "--samples", "/samples", "sphere samples for the ellipticity check");
  subs["symbol-check"]->add_option_function<std::vector<double>>(
      "--xi", [&ov](const std::vector<double>& v) { ov.values["xi"] = v; }, "evaluate P at this point");
  ov.option<int>(subs["symbol-check"], "--probe-nodes", "/probe_nodes", "random nodes for the Fourier kernel probe");
  ov.option<int>(subs["fundsol"], "--directions", "/directions", "direction count (0: default)");
  add_set_flags(subs["capacity"], ov);
  ov.option<std::string>(subs["capacity"], "--kind", "/kind", "homogeneous or inhomogeneous");
  add_set_flags(subs["potential"], ov);
  ov.option<std::string>(subs["potential"], "--method", "/method", "grid or radial");
  ov.flag(subs["potential"], "--export-field", "/export_field", true, "write the node-value CSV of U");
  ov.flag(subs["potential"], "--sign-probe", "/sign_probe", true, "also run the sign-change probe");
  ov.option<std::string>(subs["positivity"], "--method", "/method", "channel or grid");
  ov.option<int>(subs["positivity"], "--k-max", "/channels/k_max", "largest channel index");
  ov.option<double>(subs["positivity"], "--h", "/grid/h", "grid spacing (grid method)");
  ov.option<int>(subs["positivity"], "--extent", "/grid/extent", "grid extent (grid method)");
  for (const char* name : {"wiener", "dirichlet", "decay"}) add_domain_flags(subs[name], ov);
  ov.option<int>(subs["wiener"], "--j-max", "/scales/j_max", "finest dyadic level");
  ov.option<int>(subs["wiener"], "--nodes-per-rho", "/scales/nodes_per_rho", "nodes per unit radius at every scale");
  ov.option<std::string>(subs["cusp"], "--kind", "/profile/kind", "power or exponential");
  ov.option<double>(subs["cusp"], "--p", "/profile/p", "power exponent");
  ov.option<double>(subs["cusp"], "--a", "/profile/a", "exponential parameter");
  ov.option<std::string>(subs["cusp"], "--table", "/profile/table", "tabulated profile CSV (tau,f)");
  ov.option<int>(subs["cusp"], "--m", "/m", "half order m");
  ov.option<int>(subs["cusp"], "--n", "/n", "dimension n");
  ov.option<std::string>(subs["cusp"], "--method", "/method", "closed_form or quadrature");
  ov.option<std::string>(subs["dirichlet"], "--mode", "/mode", "probe or solve");
  ov.option<double>(subs["dirichlet"], "--h", "/grid/h", "grid spacing (solve mode)");
  ov.option<double>(subs["decay"], "--h", "/grid/h", "grid spacing");
  ov.option<double>(subs["decay"], "--R", "/R", "outer radius R (power of 2)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_validation;
  }

  std::string command;
  for (const auto& [name, s] : subs)
    if (s->parsed()) command = name;

  json cfg;
  try {
    // Tagged objects given by flags carry only the changed key; the tag tells resolve to merge.
    json overrides = ov.values;
    if (overrides.contains("domain") && overrides["domain"].contains("profile")) {
      overrides["domain"]["type"] = "cusp";
      if (!overrides["domain"]["profile"].contains("kind")) overrides["domain"]["profile"]["kind"] = "power";
    }
    if (overrides.contains("domain") && overrides["domain"].value("type", "") == "cusp" &&
        !overrides["domain"].contains("profile"))
      overrides["domain"]["profile"] = {{"kind", "exponential"}, {"a", 1.0}};
    const json file = config_path.empty() ? json() : parse_json_file(config_path);
    cfg = resolve(command, file, overrides);
  } catch (const std::exception& e) {
    err << "pplab " << command << ": " << e.what() << '\n';
    return exit_validation;
  }

  const auto result = execute(cfg);
  out << result.summary.dump(2) << '\n';
  try {
    write_outputs(cfg, result);
  } catch (const std::exception& e) {
    err << "pplab " << command << ": " << e.what() << '\n';
    return exit_validation;
  }
  if (!result.message.empty()) err << "pplab " << command << ": " << result.message << '\n';
  return result.exit_code;
}

}  // namespace pplab::cli
