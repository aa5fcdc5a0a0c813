#include "roughflow/harness/cli.hpp"

#include "roughflow/errors.hpp"
#include "roughflow/foliated.hpp"
#include "roughflow/harness/config.hpp"
#include "roughflow/harness/experiments.hpp"
#include "roughflow/harness/serialization.hpp"
#include "roughflow/parallel.hpp"
#include "roughflow/rough_lift.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

namespace roughflow::harness {

namespace fs = std::filesystem;

std::string resolve_out_dir(const std::string& cli_out, const std::string& config_out) {
  if (!cli_out.empty()) return cli_out;
  if (const char* env = std::getenv("ROUGHFLOW_OUT"); env != nullptr && *env != '\0') return env;
  return config_out;
}

namespace {

struct Context {
  ExperimentConfig cfg;
  fs::path out;
  std::ostream& log;
};

void write_file(const fs::path& dir, const std::string& name, const std::function<void(std::ostream&)>& fill) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::ofstream os(dir / name, std::ios::binary | std::ios::trunc);
  if (!os) throw ValidationError("cannot write " + (dir / name).string());
  fill(os);
  if (!os) throw ValidationError("error while writing " + (dir / name).string());
}

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Driver {
  PiecewisePath path;
  GridRoughPath rough;
  std::string source;
};

Driver make_driver(const ExperimentConfig& cfg) {
  PiecewisePath w;
  std::string source;
  if (!cfg.path_file.empty()) {
    w = read_path_csv_file(cfg.path_file);
    if (w.dim() != cfg.d) throw ValidationError("path_file dimension does not match d");
    source = "file";
  } else {
    w = dyadic_approx(sample_brownian(cfg.d, cfg.T, cfg.brownian_level, cfg.seed), cfg.level);
    source = "brownian";
  }
  GridRoughPath rough = lift_piecewise_linear(w, cfg.alpha);
  return Driver{std::move(w), std::move(rough), std::move(source)};
}

Manifest base_manifest(const std::string& kind, const ExperimentConfig& cfg) {
  Manifest m(kind);
  m.set("config", cfg.to_map());
  return m;
}

Manifest driver_manifest(const Driver& drv) {
  Manifest m;
  m.set("source", drv.source);
  m.set("hash", hex64(driver_hash(drv.rough)));
  m.set("cells", static_cast<std::int64_t>(drv.rough.num_cells()));
  return m;
}

// ---- subcommands --------------------------------------------------------------

void cmd_lift(Context& ctx) {
  const Driver drv = make_driver(ctx.cfg);
  const HolderReport holder = holder_norms(drv.rough);
  write_file(ctx.out, "path.csv", [&](std::ostream& os) { write_path_csv(os, drv.path); });
  write_file(ctx.out, "rough_path.json", [&](std::ostream& os) { write_rough_path_json(os, drv.rough); });
  Manifest m = base_manifest("lift", ctx.cfg);
  m.set_object("driver", driver_manifest(drv));
  m.set("holder_norm1", holder.norm1);
  m.set("holder_norm2", holder.norm2);
  m.set("files", std::vector<std::string>{"path.csv", "rough_path.json"});
  write_file(ctx.out, "manifest.json", [&](std::ostream& os) { m.write(os); });
  ctx.log << "lift: " << drv.rough.num_cells() << " cells, driver hash " << hex64(driver_hash(drv.rough)) << '\n';
}

void cmd_solve(Context& ctx) {
  const Driver drv = make_driver(ctx.cfg);
  const auto V = config_field(ctx.cfg);
  const Vector x0 = config_x0(ctx.cfg);
  const SolveConfig scfg = solve_config(ctx.cfg);
  const Trajectory traj =
      ctx.cfg.jacobians ? solve_with_jacobians(x0, drv.rough, *V, scfg, 1) : solve_rde(x0, drv.rough, *V, scfg);
  write_file(ctx.out, "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  Manifest m = base_manifest("solve", ctx.cfg);
  m.set_object("driver", driver_manifest(drv));
  m.set("subdivision", traj.subdivision);
  m.set("converged", traj.converged);
  m.set("samples", static_cast<std::int64_t>(traj.size()));
  m.set("final_state", to_std(traj.final_state()));
  m.set("files", std::vector<std::string>{"trajectory.csv"});
  write_file(ctx.out, "manifest.json", [&](std::ostream& os) { m.write(os); });
  ctx.log << "solve: " << traj.size() << " samples, subdivision " << traj.subdivision << ", x_T =";
  for (Eigen::Index i = 0; i < traj.final_state().size(); ++i) ctx.log << ' ' << fmt(traj.final_state()[i]);
  ctx.log << '\n';
}

void cmd_flow(Context& ctx) {
  const Driver drv = make_driver(ctx.cfg);
  const auto V = config_field(ctx.cfg);
  const Vector x0 = config_x0(ctx.cfg);
  const SolveConfig scfg = solve_config(ctx.cfg);
  const auto n = static_cast<std::size_t>(ctx.cfg.grid_points);
  const Eigen::Index p = ctx.cfg.p;
  std::vector<Vector> sources(n);
  for (std::size_t k = 0; k < n; ++k) {
    sources[k] = x0;
    for (Eigen::Index i = 0; i < p; ++i) {
      sources[k][i] += 2.0 * counter_uniform(ctx.cfg.seed ^ 0xf10f10ULL, k * static_cast<std::size_t>(p) +
                                                                           static_cast<std::size_t>(i)) - 1.0;
    }
  }
  struct Row {
    Vector image;
    Vector back;
  };
  const auto rows = parallel_map(n, [&](std::size_t k) {
    Row r;
    r.image = solve_rde(sources[k], drv.rough, *V, scfg).final_state();
    r.back = inverse_flow_point(r.image, drv.rough, *V, scfg, drv.rough.end());
    return r;
  });
  double max_rt = 0.0;
  double min_src = std::numeric_limits<double>::infinity();
  double min_img = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    max_rt = std::max(max_rt, (rows[i].back - sources[i]).norm());
    for (std::size_t j = i + 1; j < n; ++j) {
      min_src = std::min(min_src, (sources[i] - sources[j]).norm());
      min_img = std::min(min_img, (rows[i].image - rows[j].image).norm());
    }
  }
  write_file(ctx.out, "flow.csv", [&](std::ostream& os) {
    os << "point";
    for (Eigen::Index i = 0; i < p; ++i) os << ",x" << (i + 1);
    for (Eigen::Index i = 0; i < p; ++i) os << ",image" << (i + 1);
    for (Eigen::Index i = 0; i < p; ++i) os << ",back" << (i + 1);
    os << ",round_trip\n" << std::setprecision(17);
    for (std::size_t k = 0; k < n; ++k) {
      os << k;
      for (Eigen::Index i = 0; i < p; ++i) os << ',' << sources[k][i];
      for (Eigen::Index i = 0; i < p; ++i) os << ',' << rows[k].image[i];
      for (Eigen::Index i = 0; i < p; ++i) os << ',' << rows[k].back[i];
      os << ',' << (rows[k].back - sources[k]).norm() << '\n';
    }
  });
  Manifest m = base_manifest("flow", ctx.cfg);
  m.set_object("driver", driver_manifest(drv));
  m.set("points", static_cast<std::int64_t>(n));
  m.set("max_round_trip", max_rt);
  m.set("min_source_distance", min_src);
  m.set("min_image_distance", min_img);
  m.set("files", std::vector<std::string>{"flow.csv"});
  write_file(ctx.out, "manifest.json", [&](std::ostream& os) { m.write(os); });
  ctx.log << "flow: " << n << " points, max round trip " << fmt(max_rt) << '\n';
}

void cmd_wongzakai(Context& ctx) {
  const ConvergenceTable table = wong_zakai_experiment(ctx.cfg);
  write_file(ctx.out, "wongzakai.csv", [&](std::ostream& os) { write_convergence_csv(os, table); });
  Manifest m = base_manifest("wongzakai", ctx.cfg);
  std::vector<double> sol;
  std::vector<double> fol;
  for (const auto& r : table.rows) {
    Manifest row;
    row.set("m", r.m);
    row.set("driver_distance", r.driver_distance);
    row.set("level1_sup", r.level1_sup);
    row.set("solution_sup", r.solution_sup);
    row.set("foliated_sup", r.foliated_sup);
    row.set("round_trip", r.round_trip);
    row.set("error", r.error);
    m.append("rows", row);
    sol.push_back(r.solution_sup);
    fol.push_back(r.foliated_sup);
  }
  m.set("solution_decreasing", strictly_decreasing(sol));
  m.set("foliated_decreasing", strictly_decreasing(fol));
  m.set("files", std::vector<std::string>{"wongzakai.csv"});
  write_file(ctx.out, "manifest.json", [&](std::ostream& os) { m.write(os); });
  ctx.log << "wongzakai: m = " << ctx.cfg.m_lo << ".." << ctx.cfg.m_hi << ", solution column "
          << (strictly_decreasing(sol) ? "strictly decreasing" : "NOT strictly decreasing") << '\n';
}

void cmd_support(Context& ctx) {
  const CameronMartinPath h = config_skeleton(ctx.cfg);
  const SupportReport rep = support_skeleton_demo(ctx.cfg, h);
  write_file(ctx.out, "skeleton.csv", [&](std::ostream& os) { write_trajectory_csv(os, rep.skeleton); });
  Manifest m = base_manifest("support", ctx.cfg);
  m.set("hnorm_sq", rep.hnorm_sq);
  m.set("rde_final", to_std(rep.rde_final));
  m.set("ode_final", to_std(rep.ode_final));
  m.set("ode_distance", rep.ode_distance);
  if (rep.has_foliated) {
    Manifest leaf;
    leaf.set("y", to_std(rep.foliated_final.y));
    leaf.set("winding", rep.foliated_final.winding);
    m.set_object("foliated_final", leaf);
  }
  std::vector<double> dists;
  for (const auto& s : rep.samples) dists.push_back(s.distance);
  m.set("reachability_distances", dists);
  m.set("min_distance", rep.min_distance);
  m.set("best_seed", rep.best_seed);
  m.set("note", "reachability is qualitative; no threshold is asserted");
  m.set("files", std::vector<std::string>{"skeleton.csv"});
  write_file(ctx.out, "support.json", [&](std::ostream& os) { m.write(os); });
  ctx.log << "support: |rde - ode| = " << fmt(rep.ode_distance) << ", closest Brownian flow " << fmt(rep.min_distance)
          << " (seed " << rep.best_seed << ")\n";
}

void cmd_ldp(Context& ctx) {
  const CameronMartinPath h = config_skeleton(ctx.cfg);
  const LdpReport rep = ldp_experiment(ctx.cfg, h);
  write_file(ctx.out, "ldp.csv", [&](std::ostream& os) {
    os << "epsilon,q,exceed,exploded,samples\n" << std::setprecision(17);
    for (const auto& r : rep.rows) {
      os << r.epsilon << ',' << r.q << ',' << r.exceed << ',' << r.exploded << ',' << r.samples << '\n';
    }
  });
  Manifest m = base_manifest("ldp", ctx.cfg);
  m.set("hnorm_sq", rep.hnorm_sq);
  m.set("J", rep.rate);
  m.set("delta", rep.delta);
  m.set("slack", rep.slack);
  for (const auto& r : rep.rows) {
    Manifest row;
    row.set("epsilon", r.epsilon);
    row.set("q", r.q);
    row.set("exceed", r.exceed);
    row.set("exploded", r.exploded);
    row.set("samples", r.samples);
    m.append("rows", row);
  }
  m.set("nonincreasing", rep.nonincreasing);
  m.set("note", "small-noise concentration only; the rate constant is not estimated");
  m.set("files", std::vector<std::string>{"ldp.csv"});
  write_file(ctx.out, "ldp.json", [&](std::ostream& os) { m.write(os); });
  ctx.log << "J = " << fmt(rep.rate) << '\n';
  for (const auto& r : rep.rows) ctx.log << "q(" << fmt(r.epsilon) << ") = " << fmt(r.q) << '\n';
}

void cmd_foliated(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const auto Z = make_transversal(cfg.transversal);
  const SuspensionSpace space(Z, leafwise_dim(cfg.leaf_field));
  const auto U = make_leafwise_field(cfg.leaf_field, Z, space.leaf_dim());
  if (U->driver_dim() != cfg.d) {
    throw ValidationError("leaf_field '" + cfg.leaf_field + "' needs d = " + std::to_string(U->driver_dim()));
  }
  const Driver drv = make_driver(cfg);
  const SolveConfig scfg = solve_config(cfg);
  const LeafPoint m0 = config_leaf_point(cfg, space);
  const FoliatedTrajectory traj = solve_rde_foliated(space, m0, drv.rough, *U, scfg);
  const LeafCheckReport check = leaf_check(space, traj);

  std::vector<LeafPoint> points;
  for (int k = 0; k < cfg.grid_points; ++k) points.push_back(space.sample(cfg.seed, static_cast<std::uint64_t>(k)));
  const FlowGridReport flow = flow_grid(space, points, drv.rough, *U, scfg, {0.5 * cfg.T, cfg.T});

  write_file(ctx.out, "foliated.csv", [&](std::ostream& os) { write_foliated_csv(os, space, traj); });
  Manifest m = base_manifest("foliated", cfg);
  m.set("space", space.description());
  m.set_object("driver", driver_manifest(drv));
  m.set("subdivision", traj.subdivision);
  m.set("converged", traj.converged);
  m.set("transitions", static_cast<std::int64_t>(traj.transitions.size()));
  m.set("leaf_check", check.ok);
  if (!check.ok) m.set("leaf_check_message", check.message);
  for (const auto& ev : check.winding_history) {
    Manifest e;
    e.set("time", ev.time);
    e.set("direction", ev.direction);
    e.set("winding", ev.winding);
    m.append("winding_history", e);
  }
  m.set("final_winding", traj.final_point().winding);
  m.set("flow_points", static_cast<std::int64_t>(points.size()));
  m.set("max_round_trip", flow.max_round_trip);
  m.set("min_source_distance", flow.min_source_distance);
  m.set("min_image_distance", flow.min_image_distance);
  m.set("injective", flow.injective);
  m.set("files", std::vector<std::string>{"foliated.csv"});
  write_file(ctx.out, "manifest.json", [&](std::ostream& os) { m.write(os); });
  ctx.log << "foliated-demo: " << traj.transitions.size() << " transitions, leaf check "
          << (check.ok ? "passed" : "FAILED") << ", max round trip " << fmt(flow.max_round_trip) << '\n';
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"roughflow: rough differential equations on R^p and on mapping tori"};
  app.require_subcommand(1, 1);

  std::string config_file;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::vector<std::string> sets;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"lift", "lift a driver path (CSV or seeded Brownian) to a rough path"},
      {"solve", "solve an RDE on R^p"},
      {"flow", "flow of a grid of initial points, with inverse-flow round trips"},
      {"wongzakai", "Wong-Zakai convergence table over dyadic levels"},
      {"support", "skeleton solve against an ODE oracle, plus reachability"},
      {"ldp", "rate function of a skeleton and small-noise concentration"},
      {"foliated-demo", "leafwise solve on a suspension space with leaf checks"},
  };
  std::vector<CLI::App*> subs;
  std::vector<CLI::Option*> seed_opts;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_file, "flat key = value config file")->check(CLI::ExistingFile);
    seed_opts.push_back(sub->add_option("--seed", seed, "random seed (overrides the config)"));
    sub->add_option("--out", out_dir, "output directory (overrides ROUGHFLOW_OUT and the config)");
    sub->add_option("--set", sets, "extra key=value assignments applied after the config");
    subs.push_back(sub);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help() << "\nconfig keys (defaults):\n" << config_schema();
    return 1;
  }

  try {
    ExperimentConfig cfg = config_file.empty() ? ExperimentConfig{} : parse_config_file(config_file);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + s + "'");
      set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    for (auto* opt : seed_opts) {
      if (opt->count() > 0) cfg.seed = seed;
    }
    cfg.validate();
    Context ctx{cfg, fs::path(resolve_out_dir(out_dir, cfg.out_dir)), out};
    const std::string which = app.get_subcommands().front()->get_name();
    if (which == "lift") cmd_lift(ctx);
    else if (which == "solve") cmd_solve(ctx);
    else if (which == "flow") cmd_flow(ctx);
    else if (which == "wongzakai") cmd_wongzakai(ctx);
    else if (which == "support") cmd_support(ctx);
    else if (which == "ldp") cmd_ldp(ctx);
    else cmd_foliated(ctx);
    return 0;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\nconfig keys (defaults):\n" << config_schema();
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int cli_dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace roughflow::harness
