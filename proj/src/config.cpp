#include "adaptex/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace adaptex {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

long to_long(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

int to_int(const std::string& key, const std::string& text) {
  const long v = to_long(key, text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError(key + ": integer out of range");
  return static_cast<int>(v);
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list of numbers");
  return out;
}

std::vector<int> to_ints(const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) out.push_back(to_int(key, item));
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated list of integers");
  return out;
}

// "t0:u0, t1:u1, ..."
RegimeSchedule to_schedule(const std::string& key, const std::string& text) {
  std::vector<std::pair<double, double>> pieces;
  for (const auto& item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError(key + ": expected time:value pairs, got '" + item + "'");
    pieces.emplace_back(to_double(key, item.substr(0, colon)), to_double(key, item.substr(colon + 1)));
  }
  if (pieces.empty()) throw ConfigError(key + ": empty schedule");
  try {
    return RegimeSchedule(std::move(pieces));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string join(const auto& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ",";
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>)
      out += format_double(v);
    else
      out += std::to_string(v);
  }
  return out;
}

std::string schedule_text(const RegimeSchedule& s) {
  std::string out;
  for (const auto& [t, u] : s.pieces()) {
    if (!out.empty()) out += ",";
    out += format_double(t) + ":" + format_double(u);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

template <class T>
Setter number(T RunConfig::*group, double T::*field) {
  return [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*group).*field = to_double(k, v); };
}

template <class T>
Setter integer(T RunConfig::*group, int T::*field) {
  return [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*group).*field = to_int(k, v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.name", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (trim(v).empty()) throw ConfigError(k + ": must not be empty");
         c.name = trim(v);
       }},
      {"run.model", [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string m = trim(v);
         if (m == "impact") c.model = ModelKind::impact;
         else if (m == "limit") c.model = ModelKind::limit;
         else throw ConfigError(k + ": expected impact or limit, got '" + v + "'");
       }},
      {"run.out", [](RunConfig& c, const std::string&, const std::string& v) { c.out = trim(v); }},

      {"impact.sigma_annual", number(&RunConfig::impact, &ImpactModelParams::sigma_annual)},
      {"impact.seconds_per_year", number(&RunConfig::impact, &ImpactModelParams::seconds_per_year)},
      {"impact.resilience_rate", number(&RunConfig::impact, &ImpactModelParams::resilience_rate)},
      {"impact.noise_std", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.impact.noise.std = to_double(k, v);
       }},
      {"impact.risk_aversion", number(&RunConfig::impact, &ImpactModelParams::risk_aversion)},
      {"impact.target_shares", integer(&RunConfig::impact, &ImpactModelParams::target_shares)},
      {"impact.sizes", [](RunConfig& c, const std::string& k, const std::string& v) { c.impact.sizes = to_ints(k, v); }},
      {"impact.horizon", number(&RunConfig::impact, &ImpactModelParams::horizon)},
      {"impact.initial_price", number(&RunConfig::impact, &ImpactModelParams::initial_price)},
      {"impact.log_w_max", number(&RunConfig::impact, &ImpactModelParams::log_w_max)},

      {"impact_grid.x1_min", number(&RunConfig::impact_grid, &ImpactGridSpec::x1_min)},
      {"impact_grid.x1_max", number(&RunConfig::impact_grid, &ImpactGridSpec::x1_max)},
      {"impact_grid.x1_count", integer(&RunConfig::impact_grid, &ImpactGridSpec::x1_count)},
      {"impact_grid.x4_min", number(&RunConfig::impact_grid, &ImpactGridSpec::x4_min)},
      {"impact_grid.x4_max", number(&RunConfig::impact_grid, &ImpactGridSpec::x4_max)},
      {"impact_grid.x4_count", integer(&RunConfig::impact_grid, &ImpactGridSpec::x4_count)},
      {"impact_grid.m_min", number(&RunConfig::impact_grid, &ImpactGridSpec::m_min)},
      {"impact_grid.m_max", number(&RunConfig::impact_grid, &ImpactGridSpec::m_max)},
      {"impact_grid.m_count", integer(&RunConfig::impact_grid, &ImpactGridSpec::m_count)},
      {"impact_grid.s_nodes", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.impact_grid.s_nodes = to_doubles(k, v);
       }},

      {"limit.horizon", number(&RunConfig::limit, &LimitModelParams::horizon)},
      {"limit.max_wait", number(&RunConfig::limit, &LimitModelParams::max_wait)},
      {"limit.slot", number(&RunConfig::limit, &LimitModelParams::slot)},
      {"limit.prices", [](RunConfig& c, const std::string& k, const std::string& v) { c.limit.prices = to_doubles(k, v); }},
      {"limit.best_ask", number(&RunConfig::limit, &LimitModelParams::best_ask)},
      {"limit.impact_coefficient", number(&RunConfig::limit, &LimitModelParams::impact_coefficient)},
      {"limit.target_shares", integer(&RunConfig::limit, &LimitModelParams::target_shares)},
      {"limit.atoms", [](RunConfig& c, const std::string& k, const std::string& v) { c.limit.atoms = to_doubles(k, v); }},
      {"limit.intensity_decay", number(&RunConfig::limit, &LimitModelParams::intensity_decay)},
      {"limit.reference_price", number(&RunConfig::limit, &LimitModelParams::reference_price)},
      {"limit.risk_aversion", number(&RunConfig::limit, &LimitModelParams::risk_aversion)},
      {"limit.log_w_max", number(&RunConfig::limit, &LimitModelParams::log_w_max)},
      {"limit.p_count", [](RunConfig& c, const std::string& k, const std::string& v) { c.p_count = to_int(k, v); }},

      {"scheme.time_step", number(&RunConfig::scheme, &SchemeParams::time_step)},
      {"scheme.h2", number(&RunConfig::scheme, &SchemeParams::h2)},
      {"scheme.tol_act", number(&RunConfig::scheme, &SchemeParams::tol_act)},
      {"scheme.tol_fix", number(&RunConfig::scheme, &SchemeParams::tol_fix)},
      {"scheme.quadrature_order", integer(&RunConfig::scheme, &SchemeParams::quadrature_order)},
      {"scheme.drift", [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string d = trim(v);
         if (d == "upwind") c.scheme.drift = DriftScheme::upwind;
         else if (d == "characteristic") c.scheme.drift = DriftScheme::characteristic;
         else throw ConfigError(k + ": expected upwind or characteristic, got '" + v + "'");
       }},

      {"prior.mean", [](RunConfig& c, const std::string& k, const std::string& v) { c.impact_prior.mean = to_double(k, v); }},
      {"prior.std", [](RunConfig& c, const std::string& k, const std::string& v) { c.impact_prior.std = to_double(k, v); }},
      {"prior.p", [](RunConfig& c, const std::string& k, const std::string& v) { c.limit_prior_p = to_double(k, v); }},

      {"truth.schedule", [](RunConfig& c, const std::string& k, const std::string& v) { c.truth = to_schedule(k, v); }},
      {"truth.control", [](RunConfig& c, const std::string& k, const std::string& v) { c.control = to_schedule(k, v); }},

      {"simulate.paths", [](RunConfig& c, const std::string& k, const std::string& v) { c.paths = to_long(k, v); }},
      {"simulate.seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         const long s = to_long(k, v);
         if (s < 0) throw ConfigError(k + ": must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"simulate.decision_step", number(&RunConfig::sim, &SimConfig::decision_step)},
      {"simulate.fine_steps", integer(&RunConfig::sim, &SimConfig::fine_steps)},
      {"simulate.filter", [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string f = trim(v);
         if (f == "continuous") c.sim.filter = LimitFilter::continuous;
         else if (f == "slot") c.sim.filter = LimitFilter::slot;
         else throw ConfigError(k + ": expected continuous or slot, got '" + v + "'");
       }},

      {"output.policy_csv_rows", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.policy_csv_rows = to_long(k, v);
       }},

      {"validate.fault", [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string f = trim(v);
         if (f == "none") c.fault = ValidateFault::none;
         else if (f == "conjugate") c.fault = ValidateFault::conjugate;
         else throw ConfigError(k + ": expected none or conjugate, got '" + v + "'");
       }},
  };
  return table;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

const char* model_name(ModelKind kind) { return kind == ModelKind::impact ? "impact" : "limit"; }

std::filesystem::path RunConfig::output_dir() const { return out.empty() ? std::filesystem::path("out") / name : out; }

void RunConfig::validate() const {
  try {
    scheme.validate();
    if (model == ModelKind::impact) {
      impact.validate();
      impact_grid.validate();
      require(impact_prior.std >= 0.0, "prior.std must be >= 0");
      require(impact_prior.std == 0.0 || impact_prior.std >= impact_grid.s_nodes[1],
              "prior.std must be 0 or at least the smallest positive grid.s node");
      require(impact_prior.std <= impact_grid.s_nodes.back(), "prior.std exceeds the largest impact_grid.s_nodes value");
      require(impact_prior.mean >= impact_grid.m_min && impact_prior.mean <= impact_grid.m_max,
              "prior.mean must lie inside [impact_grid.m_min, impact_grid.m_max]");
      const double lo = impact_grid.x1_min, hi = impact_grid.x1_max;
      require(impact.initial_price > lo && impact.initial_price < hi,
              "impact.initial_price must lie strictly inside [impact_grid.x1_min, impact_grid.x1_max]");
      if (impact.has_resilience())
        require(impact_grid.x4_min < 0.0 && impact_grid.x4_max > 0.0,
                "impact_grid.x4_min < 0 < impact_grid.x4_max is required so that x4 = 0 is interior");
    } else {
      limit.validate();
      require(p_count >= 2, "limit.p_count must be >= 2");
      require(limit_prior_p >= 0.0 && limit_prior_p <= 1.0, "prior.p must lie in [0, 1]");
      if (truth)
        for (const auto& [t, u] : truth->pieces()) require(u >= 0.0 && u < 1.0, "truth.schedule values must lie in [0, 1)");
      if (control)
        for (const auto& [t, u] : control->pieces()) require(u >= 0.0 && u < 1.0, "truth.control values must lie in [0, 1)");
    }
    auto divides = [](double step, double span) {
      const double r = span / step;
      return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r);
    };
    const double horizon = model == ModelKind::impact ? impact.horizon : limit.horizon;
    require(divides(scheme.time_step, horizon), "scheme.time_step must divide the model horizon");
    require(sim.decision_step > 0.0, "simulate.decision_step must be > 0");
    require(divides(sim.decision_step, horizon), "simulate.decision_step must divide the model horizon");
    require(divides(scheme.time_step, sim.decision_step),
            "simulate.decision_step must be a multiple of scheme.time_step (policy clock)");
    require(sim.fine_steps >= 1, "simulate.fine_steps must be >= 1");
    require(paths >= 1, "simulate.paths must be >= 1");
    require(policy_csv_rows >= 1, "output.policy_csv_rows must be >= 1");
    require(control.has_value() <= truth.has_value(), "truth.control requires truth.schedule");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config syntax (line " + std::to_string(e.line()) + "): " + e.message());
  }
  RunConfig config;
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = table.find(full);
      if (it == table.end()) throw ConfigError(full + ": unknown key");
      it->second(config, full, value.data());
    }
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
  return parse_config(in);
}

nlohmann::json config_json(const RunConfig& c) {
  nlohmann::json j;
  j["run"] = {{"name", c.name}, {"model", model_name(c.model)}};
  j["scheme"] = {{"time_step", c.scheme.time_step},
                 {"h2", c.scheme.h2},
                 {"tol_act", c.scheme.tol_act},
                 {"tol_fix", c.scheme.tol_fix},
                 {"quadrature_order", c.scheme.quadrature_order},
                 {"drift", c.scheme.drift == DriftScheme::upwind ? "upwind" : "characteristic"}};
  if (c.model == ModelKind::impact) {
    const auto& p = c.impact;
    j["impact"] = {{"sigma_annual", p.sigma_annual},
                   {"seconds_per_year", p.seconds_per_year},
                   {"resilience_rate", p.resilience_rate},
                   {"noise_std", p.noise.std},
                   {"risk_aversion", p.risk_aversion},
                   {"target_shares", p.target_shares},
                   {"sizes", join(p.sizes)},
                   {"horizon", p.horizon},
                   {"initial_price", p.initial_price},
                   {"log_w_max", format_double(p.log_w_max)}};
    const auto& g = c.impact_grid;
    j["impact_grid"] = {{"x1_min", g.x1_min}, {"x1_max", g.x1_max}, {"x1_count", g.x1_count},
                        {"x4_min", g.x4_min}, {"x4_max", g.x4_max}, {"x4_count", g.x4_count},
                        {"m_min", g.m_min},   {"m_max", g.m_max},   {"m_count", g.m_count},
                        {"s_nodes", join(g.s_nodes)}};
    j["prior"] = {{"mean", c.impact_prior.mean}, {"std", c.impact_prior.std}};
  } else {
    const auto& p = c.limit;
    j["limit"] = {{"horizon", p.horizon},
                  {"max_wait", p.max_wait},
                  {"slot", p.slot},
                  {"prices", join(p.prices)},
                  {"best_ask", p.best_ask},
                  {"impact_coefficient", p.impact_coefficient},
                  {"target_shares", p.target_shares},
                  {"atoms", join(p.atoms)},
                  {"intensity_decay", p.intensity_decay},
                  {"reference_price", p.reference_price},
                  {"risk_aversion", p.risk_aversion},
                  {"log_w_max", format_double(p.log_w_max)},
                  {"p_count", c.p_count}};
    j["prior"] = {{"p", c.limit_prior_p}};
  }
  if (c.truth) j["truth"]["schedule"] = schedule_text(*c.truth);
  if (c.control) j["truth"]["control"] = schedule_text(*c.control);
  j["simulate"] = {{"paths", c.paths},
                   {"seed", c.seed},
                   {"decision_step", c.sim.decision_step},
                   {"fine_steps", c.sim.fine_steps},
                   {"filter", c.sim.filter == LimitFilter::slot ? "slot" : "continuous"}};
  return j;
}

std::unique_ptr<Problem> make_problem(const RunConfig& config) {
  if (config.model == ModelKind::impact)
    return std::make_unique<ImpactProblem>(config.impact, config.impact_grid, config.scheme.quadrature_order);
  return std::make_unique<LimitProblem>(config.limit, config.p_count);
}

}  // namespace adaptex
