// snod: command-line front end.
//
//   snod analyze  --config c.json --out dir [--svg] [--json]
//   snod simulate --config c.json --out dir [--seed N] [--svg] [--json]
//   snod network  ...
//   snod scenario ...
//
// Exit codes: 0 ok, 2 bad config, 3 numerical divergence, 4 I/O failure.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "snod/analysis.hpp"
#include "snod/config.hpp"
#include "snod/errors.hpp"
#include "snod/robot_nav.hpp"
#include "snod/simulate.hpp"
#include "snod/svg.hpp"

namespace fs = std::filesystem;
using namespace snod;

namespace {

enum Exit { kOk = 0, kConfig = 2, kDivergence = 3, kIo = 4 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool svg = false;
  bool json = false;
  int sweep = 1;
  int jobs = 1;
};

struct Context {
  const Options& opt;
  std::string command;
  Json raw;
  fs::path dir;
  std::optional<std::uint64_t> seed;
};

std::mutex g_log;

void log(const std::string& line) {
  std::lock_guard lock(g_log);
  std::cout << line << '\n';
}

void warn(const std::string& line) {
  std::lock_guard lock(g_log);
  std::cerr << "warning: " << line << '\n';
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  body(out);
  out.flush();
  if (!out) throw IoError(fmt::format("error while writing {}", path.string()));
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, [&](std::ostream& os) { os << text; });
}

void write_json(const Context& ctx, const fs::path& path, Json body) {
  body["manifest"] = manifest(ctx.command, ctx.raw, ctx.seed);
  write_text(path, body.dump(2) + "\n");
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
  }
}

std::string safe_name(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out.empty() ? "set" : out;
}

Json spikes_json(std::span<const SpikeEvent> events, std::size_t n_agents) {
  Json per = Json::array();
  for (std::size_t i = 0; i < n_agents; ++i) {
    std::size_t up = 0, down = 0;
    for (const auto& e : events) {
      if (e.agent != i) continue;
      (e.direction == Direction::Up ? up : down) += 1;
    }
    per.push_back({{"agent", i}, {"up", up}, {"down", down}});
  }
  return per;
}

// ---------------------------------------------------------------- analyze

void run_analyze(const Context& ctx) {
  const AnalyzeConfig cfg = parse_analyze(ctx.raw);
  make_dir(ctx.dir);
  Json reports = Json::array();
  for (const auto& set : cfg.parameter_sets) {
    const ModelParams& p = set.params;
    const auto cls = classify_pitchfork(p);
    const auto branches = trace_branches(p, cfg.b, cfg.u0_range, cfg.step, cfg.continuation);
    const auto folds = all_folds(branches);
    const std::string stem = safe_name(set.name);

    write_file(ctx.dir / (stem + "_branches.csv"), [&](std::ostream& os) {
      os << "u0,z,stability,branch_id\n";
      for (std::size_t b = 0; b < branches.size(); ++b) {
        for (const auto& pt : branches[b].points) {
          os << fmt::format("{:.17g},{:.17g},{},{}\n", pt.u0, pt.z, to_string(pt.stability), b);
        }
      }
    });
    if (ctx.opt.svg) {
      write_text(ctx.dir / (stem + "_bifurcation.svg"),
                 bifurcation_svg(branches, fmt::format("{}: ku = {:.4g}, {}", set.name, p.ku, to_string(cls))));
    }

    std::string line = fmt::format("{}: u0* = {:.6g}, pitchfork {}, {} branch(es), {} fold(s)", set.name,
                                   critical_attention(p), to_string(cls), branches.size(), folds.size());
    Json sens = nullptr;
    if (cls == PitchforkClass::Subcritical) {
      try {
        const auto fs_ = fold_sensitivity(p);
        sens = {{"u0_dagger", fs_.u0_dagger}, {"z_dagger", fs_.z_dagger}, {"du0_dku", fs_.du0_dku}};
        line += fmt::format(", u0_dagger = {:.6g} (du0/dku = {:.6g})", fs_.u0_dagger, fs_.du0_dku);
      } catch (const RegimeError& e) {
        warn(fmt::format("{}: {}", set.name, e.what()));
      }
    }
    log(line);

    const auto tc = taylor_coefficients(p);
    Json fold_list = Json::array();
    for (const auto& f : folds) fold_list.push_back({{"u0", f.u0}, {"z", f.z}});
    reports.push_back({{"name", set.name},
                       {"params", to_json(p)},
                       {"u0_star", critical_attention(p)},
                       {"pitchfork", std::string(to_string(cls))},
                       {"taylor", {{"c1", tc.c1}, {"c3", tc.c3}, {"c5", tc.c5}, {"p_norm", tc.p_norm}, {"q_norm", tc.q_norm}}},
                       {"branches", branches.size()},
                       {"folds", fold_list},
                       {"fold_sensitivity", sens}});
    if (ctx.opt.json) {
      write_json(ctx, ctx.dir / (stem + "_report.json"), reports.back());
    }
  }
  if (ctx.opt.json) write_json(ctx, ctx.dir / "report.json", Json{{"parameter_sets", reports}});
}

// ---------------------------------------------------------------- simulate

void run_simulate(const Context& ctx, SimulateConfig cfg) {
  for (const auto& w : cfg.params.warnings()) if (cfg.system == SystemKind::SNOD) warn(w);
  for (const auto& w : cfg.integration.warnings(cfg.params)) warn(w);
  const std::vector<AgentState> init{cfg.initial};
  const std::vector<InputSignal> inputs{cfg.input};
  const Trajectory traj = integrate(cfg.system, init, nullptr, cfg.params, cfg.integration, inputs);
  const auto spikes = detect_spikes(traj, cfg.spike_threshold);

  make_dir(ctx.dir);
  write_file(ctx.dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  write_file(ctx.dir / "spikes.csv", [&](std::ostream& os) { write_spikes_csv(os, spikes); });

  const double t_end = traj.times.back();
  const double b_end = cfg.input(t_end);
  std::vector<EquilibriumPoint> eq;
  if (cfg.system == SystemKind::SNOD) eq = snod_equilibria(cfg.params, b_end);

  if (ctx.opt.svg) {
    if (cfg.system == SystemKind::SNOD) {
      std::vector<double> grid;
      const auto [z0, z1] = cfg.phase_plane.z_range;
      for (int k = 0; k < cfg.phase_plane.points; ++k) {
        grid.push_back(z0 + (z1 - z0) * k / (cfg.phase_plane.points - 1.0));
      }
      const auto nc = nullclines(cfg.params, b_end, grid);
      write_text(ctx.dir / "phase_plane.svg",
                 phase_plane_svg(nc, eq, &traj, fmt::format("u0 = {:.4g}, b = {:.4g}", cfg.params.u0, b_end)));
    }
    write_text(ctx.dir / "timeseries.svg", timeseries_svg(traj, fmt::format("{} opinion", to_string(cfg.system))));
  }

  const double rate = spike_frequency(spikes, {0.0, t_end});
  log(fmt::format("{}: {} spike(s) over t = [0, {}], rate {:.4g}", ctx.dir.string(), spikes.size(), t_end, rate));
  if (ctx.opt.json) {
    Json eq_list = Json::array();
    for (const auto& e : eq) {
      Json ev = Json::array();
      for (const auto& l : e.eigenvalues) ev.push_back({l.real(), l.imag()});
      eq_list.push_back({{"z", e.z}, {"u_s", e.u_s}, {"stability", std::string(to_string(e.stability))}, {"eigenvalues", ev}});
    }
    write_json(ctx, ctx.dir / "summary.json",
               {{"system", std::string(to_string(cfg.system))},
                {"spike_count", spikes.size()},
                {"spike_rate", rate},
                {"spikes", spikes_json(spikes, 1)},
                {"equilibria", eq_list},
                {"warnings", cfg.params.warnings()}});
  }
}

// ---------------------------------------------------------------- network

void run_network(const Context& ctx, NetworkRunConfig cfg) {
  for (const auto& w : cfg.params.warnings()) warn(w);
  for (const auto& w : cfg.integration.warnings(cfg.params)) warn(w);
  const Trajectory traj =
      integrate(SystemKind::Network, cfg.initial, &cfg.network, cfg.params, cfg.integration);
  const auto spikes = detect_spikes(traj, cfg.spike_threshold);
  const std::size_t n = traj.n_agents;

  make_dir(ctx.dir);
  write_file(ctx.dir / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  write_file(ctx.dir / "spikes.csv", [&](std::ostream& os) { write_spikes_csv(os, spikes); });
  if (ctx.opt.svg) write_text(ctx.dir / "timeseries.svg", timeseries_svg(traj, "network opinions"));

  Json matrix = Json::array(), degenerate = Json::array();
  for (std::size_t i = 0; i < n; ++i) {
    Json row = Json::array(), drow = Json::array();
    for (std::size_t k = 0; k < n; ++k) {
      const auto s = sync_metric(traj, i, k, cfg.sync_window);
      row.push_back(s.value);
      drow.push_back(s.degenerate);
    }
    matrix.push_back(row);
    degenerate.push_back(drow);
  }
  std::string line = fmt::format("{}: {} agent(s), {} spike(s)", ctx.dir.string(), n, spikes.size());
  if (n > 1) line += fmt::format(", sync(0,1) = {:.3f}", matrix[0][1].get<double>());
  log(line);
  if (ctx.opt.json) {
    Json window = cfg.sync_window ? Json{cfg.sync_window->first, cfg.sync_window->second} : Json(nullptr);
    write_json(ctx, ctx.dir / "sync.json",
               {{"sync", matrix}, {"degenerate", degenerate}, {"window", window},
                {"spikes", spikes_json(spikes, n)}});
  }
}

// ---------------------------------------------------------------- scenario

Json scenario_metrics(const ScenarioResult& r) {
  Json robots = Json::array();
  const auto per_spikes = spikes_json(r.spikes, r.n_robots);
  for (std::size_t i = 0; i < r.n_robots; ++i) {
    robots.push_back({{"robot", i},
                      {"min_human_distance", std::isfinite(r.min_human_distance[i]) ? Json(r.min_human_distance[i]) : Json(nullptr)},
                      {"time_to_goal", r.time_to_goal[i] ? Json(*r.time_to_goal[i]) : Json(nullptr)},
                      {"collision", static_cast<bool>(r.collision[i])},
                      {"spikes_up", per_spikes[i]["up"]},
                      {"spikes_down", per_spikes[i]["down"]}});
  }
  return {{"robots", robots}, {"proxy_saturations", r.proxy_saturations}};
}

void run_scenario_cmd(const Context& ctx, ScenarioRunConfig cfg) {
  for (const auto& w : cfg.scenario.params.warnings()) warn(w);
  for (const auto& w : cfg.scenario.integration.warnings(cfg.scenario.params)) warn(w);
  const ScenarioResult res = run_scenario(cfg.scenario);
  make_dir(ctx.dir);
  write_file(ctx.dir / "trajectory.csv", [&](std::ostream& os) { write_scenario_csv(os, res); });
  Json body{{"snod", scenario_metrics(res)}};
  if (ctx.opt.svg) write_text(ctx.dir / "overhead.svg", scenario_svg(cfg.scenario, res, "S-NOD robots"));

  for (std::size_t i = 0; i < res.n_robots; ++i) {
    log(fmt::format("{}: robot {} min distance {:.3f} m, goal {}, collision {}", ctx.dir.string(), i,
                    res.min_human_distance[i],
                    res.time_to_goal[i] ? fmt::format("at {:.2f} s", *res.time_to_goal[i]) : "not reached",
                    res.collision[i] ? "yes" : "no"));
  }
  if (cfg.nod_baseline) {
    ScenarioConfig base = cfg.scenario;
    base.params.kus = 0.0;
    const ScenarioResult nod = run_scenario(base);
    write_file(ctx.dir / "baseline_trajectory.csv", [&](std::ostream& os) { write_scenario_csv(os, nod); });
    body["nod_baseline"] = scenario_metrics(nod);
    if (ctx.opt.svg) write_text(ctx.dir / "baseline_overhead.svg", scenario_svg(base, nod, "NOD baseline"));
  }
  if (ctx.opt.json) write_json(ctx, ctx.dir / "result.json", body);
}

// ---------------------------------------------------------------- dispatch

template <class Cfg>
void apply_seed(Cfg& cfg, std::uint64_t seed) {
  if constexpr (requires { cfg.scenario; }) {
    cfg.scenario.integration.seed = seed;
  } else {
    cfg.integration.seed = seed;
  }
}

template <class Cfg>
std::uint64_t config_seed(const Cfg& cfg) {
  if constexpr (requires { cfg.scenario; }) {
    return cfg.scenario.integration.seed;
  } else {
    return cfg.integration.seed;
  }
}

// Runs one seed, or a sweep of consecutive seeds into out/seed_<s>.
template <class Cfg, class Fn>
void run_seeded(const Options& opt, const std::string& command, const Json& raw, Cfg cfg, Fn fn) {
  if (opt.seed) apply_seed(cfg, *opt.seed);
  const std::uint64_t first = config_seed(cfg);
  if (opt.sweep <= 1) {
    fn(Context{opt, command, raw, fs::path(opt.out), first}, cfg);
    return;
  }
  std::vector<std::exception_ptr> errors(opt.sweep);
  std::mutex next_mutex;
  int next = 0;
  const auto worker = [&] {
    while (true) {
      int k;
      {
        std::lock_guard lock(next_mutex);
        if (next >= opt.sweep) return;
        k = next++;
      }
      const std::uint64_t seed = first + static_cast<std::uint64_t>(k);
      Cfg local = cfg;
      apply_seed(local, seed);
      try {
        fn(Context{opt, command, raw, fs::path(opt.out) / fmt::format("seed_{}", seed), seed}, local);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < std::max(1, std::min(opt.jobs, opt.sweep)); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int dispatch(const std::string& command, const Options& opt) {
  const Json raw = load_json(opt.config);
  if (command == "analyze") {
    if (opt.sweep > 1) throw ConfigError("--sweep applies to stochastic commands only");
    run_analyze(Context{opt, command, raw, fs::path(opt.out), std::nullopt});
  } else if (command == "simulate") {
    run_seeded(opt, command, raw, parse_simulate(raw), run_simulate);
  } else if (command == "network") {
    run_seeded(opt, command, raw, parse_network(raw), run_network);
  } else {
    run_seeded(opt, command, raw, parse_scenario(raw), run_scenario_cmd);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear opinion dynamics and spiking opinion dynamics toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Options opt;
  std::string chosen;
  for (const char* name : {"analyze", "simulate", "network", "scenario"}) {
    const char* help = std::string_view(name) == "analyze"    ? "bifurcation analysis of NOD"
                       : std::string_view(name) == "simulate" ? "single-agent NOD / S-NOD run"
                       : std::string_view(name) == "network"  ? "multi-agent S-NOD run"
                                                              : "robot navigation scenario";
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "JSON config file")->required();
    sub->add_option("--out", opt.out, "output directory")->required();
    sub->add_option("--seed", opt.seed, "override the integration seed");
    sub->add_flag("--svg", opt.svg, "also write SVG figures");
    sub->add_flag("--json", opt.json, "also write JSON reports");
    if (std::string_view(name) != "analyze") {
      sub->add_option("--sweep", opt.sweep, "run this many consecutive seeds, one subdirectory each")
          ->check(CLI::Range(1, 100000));
      sub->add_option("--jobs", opt.jobs, "worker threads for --sweep")->check(CLI::Range(1, 256));
    }
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    return dispatch(chosen, opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ContinuationError& e) {
    std::cerr << "continuation error: " << e.what() << '\n';
    return kConfig;
  } catch (const RegimeError& e) {
    std::cerr << "regime error: " << e.what() << '\n';
    return kConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << " (last valid t = " << e.last_valid_time() << ")\n";
    return kDivergence;
  } catch (const DomainError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kDivergence;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
