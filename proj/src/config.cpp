#include "snod/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "snod/errors.hpp"

namespace snod {

namespace {

// Object view that remembers which keys were read so leftovers can be
// reported as unknown.
class Obj {
 public:
  Obj(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{}: expected an object", where()));
  }

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const Json* find(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const Json& require(const std::string& key) {
    const Json* v = find(key);
    if (v == nullptr) throw ConfigError(fmt::format("{}: missing required key", child(key)));
    return *v;
  }

  double number(const std::string& key, double fallback) {
    const Json* v = find(key);
    return v == nullptr ? fallback : as_number(*v, child(key));
  }

  bool boolean(const std::string& key, bool fallback) {
    const Json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) throw ConfigError(fmt::format("{}: expected true or false", child(key)));
    return v->get<bool>();
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw ConfigError(fmt::format("{}: unknown key", child(key)));
    }
  }

  static double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(fmt::format("{}: expected a number", path));
    return v.get<double>();
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::string index_path(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

const Json& array(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(fmt::format("{}: expected an array", path));
  return v;
}

std::vector<double> numbers(const Json& v, const std::string& path, std::optional<std::size_t> n = {}) {
  array(v, path);
  if (n && v.size() != *n) throw ConfigError(fmt::format("{}: expected {} numbers", path, *n));
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(Obj::as_number(v[i], index_path(path, i)));
  return out;
}

std::pair<double, double> interval(const Json& v, const std::string& path) {
  const auto x = numbers(v, path, 2);
  return {x[0], x[1]};
}

Vec2 point(const Json& v, const std::string& path) {
  const auto x = numbers(v, path, 2);
  return {x[0], x[1]};
}

ModelParams parse_params(const Json& v, const std::string& path) {
  Obj o(v, path);
  ModelParams p;
  p.d = o.number("d", p.d);
  p.a = o.number("a", p.a);
  p.u0 = o.number("u0", p.u0);
  p.ku = o.number("ku", p.ku);
  p.kus = o.number("kus", p.kus);
  p.tau_z = o.number("tau_z", p.tau_z);
  p.tau_us = o.number("tau_us", p.tau_us);
  o.finish();
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  return p;
}

AgentState parse_state(const Json& v, const std::string& path) {
  Obj o(v, path);
  AgentState s;
  s.z = o.number("z", 0.0);
  s.u_s = o.number("u_s", 0.0);
  o.finish();
  return s;
}

// A number is a constant input; an array of [t_start, value] pairs is a
// piecewise-constant schedule.
InputSignal parse_input(const Json& v, const std::string& path) {
  if (v.is_number()) return InputSignal::constant(v.get<double>());
  array(v, path);
  std::vector<std::pair<double, double>> bps;
  for (std::size_t i = 0; i < v.size(); ++i) bps.push_back(interval(v[i], index_path(path, i)));
  try {
    return InputSignal(std::move(bps));
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

IntegrationConfig parse_integration(const Json* v, const std::string& path) {
  IntegrationConfig c;
  if (v == nullptr) return c;
  Obj o(*v, path);
  c.dt = o.number("dt", c.dt);
  c.t_end = o.number("t_end", c.t_end);
  c.noise_sigma = o.number("noise_sigma", c.noise_sigma);
  if (const Json* s = o.find("seed")) {
    if (!s->is_number_unsigned()) throw ConfigError(fmt::format("{}: expected a non-negative integer", o.child("seed")));
    c.seed = s->get<std::uint64_t>();
  }
  c.scheme = c.noise_sigma > 0.0 ? Scheme::StochasticEulerMaruyama : Scheme::DeterministicRK4;
  if (const Json* s = o.find("scheme")) {
    const std::string name = s->is_string() ? s->get<std::string>() : "";
    if (name == "rk4") {
      c.scheme = Scheme::DeterministicRK4;
    } else if (name == "euler_maruyama") {
      c.scheme = Scheme::StochasticEulerMaruyama;
    } else {
      throw ConfigError(fmt::format("{}: expected \"rk4\" or \"euler_maruyama\"", o.child("scheme")));
    }
  }
  o.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  return c;
}

std::vector<double> parse_matrix(const Json& v, const std::string& path, std::size_t& n) {
  array(v, path);
  n = v.size();
  if (n == 0) throw ConfigError(fmt::format("{}: matrix is empty", path));
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = numbers(v[i], index_path(path, i), n);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

double positive(double v, const std::string& path) {
  if (!(v > 0.0)) throw ConfigError(fmt::format("{}: must be > 0", path));
  return v;
}

}  // namespace

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read config file {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError(fmt::format("error while reading {}", path.string()));
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

AnalyzeConfig parse_analyze(const Json& j) {
  Obj o(j, "");
  AnalyzeConfig c;
  const Json& sets = array(o.require("parameter_sets"), "parameter_sets");
  if (sets.empty()) throw ConfigError("parameter_sets: at least one parameter set required");
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const std::string path = index_path("parameter_sets", i);
    Obj s(sets[i], path);
    NamedParams np;
    if (const Json* name = s.find("name")) {
      if (!name->is_string()) throw ConfigError(fmt::format("{}.name: expected a string", path));
      np.name = name->get<std::string>();
    } else {
      np.name = fmt::format("set{}", i);
    }
    np.params = parse_params(s.require("params"), path + ".params");
    s.finish();
    c.parameter_sets.push_back(std::move(np));
  }
  c.b = o.number("b", c.b);
  c.u0_range = interval(o.require("u0_range"), "u0_range");
  if (!(c.u0_range.second > c.u0_range.first)) {
    throw ConfigError(fmt::format("u0_range: empty range [{}, {}]", c.u0_range.first, c.u0_range.second));
  }
  c.step = positive(o.number("step", c.step), "step");
  if (const Json* cont = o.find("continuation")) {
    Obj k(*cont, "continuation");
    c.continuation.max_dz = positive(k.number("max_dz", c.continuation.max_dz), "continuation.max_dz");
    const double refine = k.number("max_refine", c.continuation.max_refine);
    const double grid = k.number("grid_points", c.continuation.scan.grid_points);
    if (refine < 0 || refine > 40 || refine != static_cast<int>(refine)) {
      throw ConfigError("continuation.max_refine: expected an integer in [0, 40]");
    }
    if (grid < 16 || grid > 1e7 || grid != static_cast<int>(grid)) {
      throw ConfigError("continuation.grid_points: expected an integer in [16, 1e7]");
    }
    c.continuation.max_refine = static_cast<int>(refine);
    c.continuation.scan.grid_points = static_cast<int>(grid);
    c.continuation.scan.margin = positive(k.number("margin", c.continuation.scan.margin), "continuation.margin");
    k.finish();
  }
  o.finish();
  return c;
}

SimulateConfig parse_simulate(const Json& j) {
  Obj o(j, "");
  SimulateConfig c;
  if (const Json* s = o.find("system")) {
    const std::string name = s->is_string() ? s->get<std::string>() : "";
    if (name == "nod") {
      c.system = SystemKind::NOD;
    } else if (name == "snod") {
      c.system = SystemKind::SNOD;
    } else {
      throw ConfigError("system: expected \"nod\" or \"snod\"");
    }
  }
  c.params = parse_params(o.require("params"), "params");
  if (const Json* in = o.find("input")) c.input = parse_input(*in, "input");
  if (const Json* s = o.find("initial")) c.initial = parse_state(*s, "initial");
  c.integration = parse_integration(o.find("integration"), "integration");
  c.spike_threshold = positive(o.number("spike_threshold", c.spike_threshold), "spike_threshold");
  if (const Json* pp = o.find("phase_plane")) {
    Obj k(*pp, "phase_plane");
    if (const Json* r = k.find("z_range")) c.phase_plane.z_range = interval(*r, "phase_plane.z_range");
    if (!(c.phase_plane.z_range.second > c.phase_plane.z_range.first)) {
      throw ConfigError("phase_plane.z_range: empty range");
    }
    const double pts = k.number("points", c.phase_plane.points);
    if (pts < 2 || pts > 1e6 || pts != static_cast<int>(pts)) {
      throw ConfigError("phase_plane.points: expected an integer in [2, 1e6]");
    }
    c.phase_plane.points = static_cast<int>(pts);
    k.finish();
  }
  o.finish();
  return c;
}

NetworkRunConfig parse_network(const Json& j) {
  Obj o(j, "");
  NetworkRunConfig c;
  c.params = parse_params(o.require("params"), "params");
  std::size_t n = 0;
  c.network.adjacency = parse_matrix(o.require("adjacency"), "adjacency", n);
  c.network.n_agents = n;
  if (const Json* in = o.find("inputs")) {
    array(*in, "inputs");
    if (in->size() != n) throw ConfigError(fmt::format("inputs: expected {} entries", n));
    for (std::size_t i = 0; i < n; ++i) c.network.inputs.push_back(parse_input((*in)[i], index_path("inputs", i)));
  }
  if (const Json* ap = o.find("agent_params")) {
    array(*ap, "agent_params");
    for (std::size_t i = 0; i < ap->size(); ++i) {
      c.network.agent_params.push_back(parse_params((*ap)[i], index_path("agent_params", i)));
    }
  }
  c.network.allow_heterogeneous = o.boolean("allow_heterogeneous", false);
  if (const Json* init = o.find("initial")) {
    array(*init, "initial");
    if (init->size() != n) throw ConfigError(fmt::format("initial: expected {} entries", n));
    for (std::size_t i = 0; i < n; ++i) c.initial.push_back(parse_state((*init)[i], index_path("initial", i)));
  } else {
    c.initial.assign(n, AgentState{});
  }
  c.integration = parse_integration(o.find("integration"), "integration");
  c.spike_threshold = positive(o.number("spike_threshold", c.spike_threshold), "spike_threshold");
  if (const Json* w = o.find("sync_window")) {
    c.sync_window = interval(*w, "sync_window");
    if (!(c.sync_window->second > c.sync_window->first)) throw ConfigError("sync_window: empty window");
  }
  o.finish();
  try {
    c.network.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("network: {}", e.what()));
  }
  return c;
}

ScenarioRunConfig parse_scenario(const Json& j) {
  Obj o(j, "");
  ScenarioRunConfig run;
  ScenarioConfig& c = run.scenario;
  c.params = parse_params(o.require("params"), "params");

  const Json& robots = array(o.require("robots"), "robots");
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const std::string path = index_path("robots", i);
    Obj r(robots[i], path);
    RobotSpec spec;
    spec.start = point(r.require("start"), path + ".start");
    spec.goal = point(r.require("goal"), path + ".goal");
    spec.heading = r.number("heading", 0.0);
    if (const Json* op = r.find("opinion")) spec.opinion = parse_state(*op, path + ".opinion");
    r.finish();
    c.robots.push_back(spec);
  }
  const std::size_t n = c.robots.size();
  if (n == 0) throw ConfigError("robots: at least one robot required");

  if (const Json* humans = o.find("humans")) {
    array(*humans, "humans");
    for (std::size_t i = 0; i < humans->size(); ++i) {
      const std::string path = index_path("humans", i);
      Obj h(humans->at(i), path);
      HumanMover mover;
      const Json& wps = array(h.require("path"), path + ".path");
      for (std::size_t k = 0; k < wps.size(); ++k) {
        const auto x = numbers(wps[k], index_path(path + ".path", k), 3);
        mover.path.push_back({x[0], {x[1], x[2]}});
      }
      mover.radius = h.number("radius", mover.radius);
      h.finish();
      try {
        mover.validate();
      } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path, e.what()));
      }
      c.humans.push_back(std::move(mover));
    }
  }

  if (const Json* net = o.find("network")) {
    Obj k(*net, "network");
    std::size_t m = 0;
    c.adjacency = parse_matrix(k.require("adjacency"), "network.adjacency", m);
    if (m != n) throw ConfigError(fmt::format("network.adjacency: expected {}x{} for {} robots", n, n, n));
    c.decay = positive(k.number("decay", c.decay), "network.decay");
    k.finish();
  } else {
    c.adjacency.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) c.adjacency[i * n + i] = c.params.a;
  }
  if (const Json* a = o.find("attention")) {
    Obj k(*a, "attention");
    c.attention.c_u = k.number("c_u", c.attention.c_u);
    c.attention.r_a = k.number("r_a", c.attention.r_a);
    c.attention.e_a = k.number("e_a", c.attention.e_a);
    k.finish();
  }
  if (const Json* s = o.find("steer")) {
    Obj k(*s, "steer");
    c.steer.k_h = k.number("k_h", c.steer.k_h);
    c.steer.k_z = k.number("k_z", c.steer.k_z);
    k.finish();
  }
  c.integration = parse_integration(o.find("integration"), "integration");
  c.speed = o.number("speed", c.speed);
  c.v_max = o.number("v_max", c.v_max);
  c.goal_radius = o.number("goal_radius", c.goal_radius);
  c.collision_radius = o.number("collision_radius", c.collision_radius);
  c.sensing_range = o.number("sensing_range", c.sensing_range);
  c.z_h_max = o.number("z_h_max", c.z_h_max);
  c.spike_threshold = o.number("spike_threshold", c.spike_threshold);
  run.nod_baseline = o.boolean("nod_baseline", false);
  o.finish();
  c.validate();
  return run;
}

Json to_json(const ModelParams& p) {
  return Json{{"d", p.d},     {"a", p.a},         {"u0", p.u0},        {"ku", p.ku},
              {"kus", p.kus}, {"tau_z", p.tau_z}, {"tau_us", p.tau_us}};
}

Json manifest(const std::string& command, const Json& config, std::optional<std::uint64_t> seed) {
  Json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed ? Json(*seed) : Json(nullptr);
  m["version"] = kVersion;
  return m;
}

}  // namespace snod
