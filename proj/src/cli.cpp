#include "stochproj/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "stochproj/characterize.hpp"
#include "stochproj/json_io.hpp"
#include "stochproj/order.hpp"
#include "stochproj/projection.hpp"
#include "stochproj/suite.hpp"
#include "stochproj/transforms.hpp"

namespace stochproj::cli {

namespace {

enum class LogLevel { error = 0, info = 1, debug = 2 };

LogLevel log_level_from_env() {
  const char* v = std::getenv("STOCHPROJ_LOG");
  if (!v) return LogLevel::error;
  const std::string s(v);
  if (s == "debug") return LogLevel::debug;
  if (s == "info") return LogLevel::info;
  return LogLevel::error;
}

class Log {
 public:
  Log(std::ostream& err, LogLevel level) : err_(err), level_(level) {}
  void info(const std::string& msg) const { emit(LogLevel::info, "info", msg); }
  void debug(const std::string& msg) const { emit(LogLevel::debug, "debug", msg); }
  void error(const std::string& msg) const { err_ << "error: " << msg << '\n'; }

 private:
  void emit(LogLevel at, const char* tag, const std::string& msg) const {
    if (level_ >= at) err_ << tag << ": " << msg << '\n';
  }
  std::ostream& err_;
  LogLevel level_;
};

struct RunConfig {
  std::vector<std::string> inputs;
  std::string direction = "backward";
  std::string order = "convex";
  std::string kind = "convex";
  std::string op = "q2";
  std::string grid_spec;
  double dilation = 1.5;
  double gap_tol = 1e-6;
  double envelope_tol = 1e-10;
  double fw_tol = 1e-10;
  bool canonical = false;
  std::uint64_t seed = 42;
  std::size_t pairs = 100;
  std::size_t projections = 20;
  std::size_t transforms = 50;
  std::string out_path;
  std::string csv_path;
  std::string dump_lp_path;
};

// "lo,hi,n" (same box on every axis) or "lo1:lo2,hi1:hi2,n1:n2".
Grid parse_grid(const std::string& spec, std::size_t dim) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
  if (parts.size() != 3) throw ParseError("--grid", "expected lo,hi,n");
  auto axis_values = [&](const std::string& s) {
    std::vector<std::string> v;
    std::stringstream as(s);
    for (std::string p; std::getline(as, p, ':');) v.push_back(p);
    if (v.size() == 1) v.assign(dim, v[0]);
    if (v.size() != dim) throw ParseError("--grid", "per-axis values must match the dimension");
    return v;
  };
  std::vector<double> lo, hi;
  std::vector<std::size_t> n;
  try {
    for (const auto& s : axis_values(parts[0])) lo.push_back(std::stod(s));
    for (const auto& s : axis_values(parts[1])) hi.push_back(std::stod(s));
    for (const auto& s : axis_values(parts[2])) {
      const long long k = std::stoll(s);
      if (k < 2) throw ParseError("--grid", "need at least 2 nodes per axis");
      n.push_back(static_cast<std::size_t>(k));
    }
  } catch (const std::logic_error&) {
    throw ParseError("--grid", "not a number in '" + spec + "'");
  }
  return Grid(lo, hi, n);
}

DiscreteMeasure load_measure(const std::string& path, const std::string& field) {
  return measure_from_json(read_json_file(path), field);
}

void require_inputs(const RunConfig& cfg, std::size_t lo, std::size_t hi) {
  if (cfg.inputs.size() < lo || cfg.inputs.size() > hi) {
    throw ParseError("inputs", "expected " + std::to_string(lo) +
                                   (lo == hi ? "" : " to " + std::to_string(hi)) + " input files");
  }
}

void require_positive(double v, const char* flag) {
  if (!(v > 0.0)) throw ParseError(flag, "must be positive");
}

class Output {
 public:
  Output(const RunConfig& cfg, std::ostream& out) : out_(&out) {
    if (!cfg.out_path.empty()) {
      file_.open(cfg.out_path);
      if (!file_) throw ParseError("--out", "cannot write " + cfg.out_path);
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }
  void json(const Json& j) { *out_ << dump(j); }

 private:
  std::ostream* out_;
  std::ofstream file_;
};

struct Instance {
  DiscreteMeasure mu;
  DiscreteMeasure nu;
};

Instance load_instance(const RunConfig& cfg) {
  require_inputs(cfg, 2, 2);
  Instance inst{load_measure(cfg.inputs[0], "mu"), load_measure(cfg.inputs[1], "nu")};
  if (inst.mu.dim() != inst.nu.dim()) throw ParseError("nu.points", "dimension differs from mu");
  return inst;
}

ProjectionResult run_projection(const RunConfig& cfg, const Instance& inst, std::ostream* trace,
                                const Log& log) {
  const Direction dir = parse_direction(cfg.direction);
  const OrderKind kind = parse_order_kind(cfg.order);
  require_positive(cfg.dilation, "--dilate");
  require_positive(cfg.fw_tol, "--fw-tol");
  require_positive(cfg.envelope_tol, "--envelope-tol");

  ProjectionOptions opts;
  opts.dilation = cfg.dilation;
  opts.fw_tolerance = cfg.fw_tol;
  opts.canonical = cfg.canonical;
  opts.lp.trace = trace;

  std::optional<Grid> grid;
  if (!cfg.grid_spec.empty()) grid = parse_grid(cfg.grid_spec, inst.mu.dim());

  ProjectionProblem p{dir, OrderSpec::convex(), dir == Direction::backward ? inst.mu : inst.nu,
                      dir == Direction::backward ? inst.nu : inst.mu, {}};
  switch (kind) {
    case OrderKind::convex:
      if (grid) {
        p.candidates = dir == Direction::backward ? std::vector<Point>{} : grid->nodes();
        if (dir == Direction::backward) {
          for (std::size_t k : grid->interior_nodes()) p.candidates.push_back(grid->node(k));
        }
      } else if (dir == Direction::forward) {
        const Grid g = default_forward_grid(inst.mu, inst.nu, opts);
        log.info("forward candidates: default grid with " + std::to_string(g.size()) + " nodes");
        p.candidates = g.nodes();
      }
      break;
    case OrderKind::subharmonic:
      if (!grid) throw ParseError("--grid", "required for the subharmonic order");
      p.order = OrderSpec::subharmonic(*grid);
      break;
    case OrderKind::trivial:
      throw ParseError("--order", "projections support convex and subharmonic orders");
  }

  const auto t0 = std::chrono::steady_clock::now();
  ProjectionResult r = solve_projection(p, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log.info(std::string(to_string(dir)) + " " + to_string(kind) + " projection: cost " +
           std::to_string(r.cost) + ", gap " + std::to_string(r.duality_gap) + ", " +
           std::to_string(secs) + " s");
  log.debug("projection atoms: " + std::to_string(r.projection.size()) +
            ", iterations: " + std::to_string(r.iterations));
  return r;
}

int cmd_project(const RunConfig& cfg, std::ostream& out, const Log& log) {
  const Instance inst = load_instance(cfg);
  std::ofstream trace;
  if (!cfg.dump_lp_path.empty()) {
    trace.open(cfg.dump_lp_path);
    if (!trace) throw ParseError("--dump-lp", "cannot write " + cfg.dump_lp_path);
  }
  const ProjectionResult r = run_projection(cfg, inst, trace.is_open() ? &trace : nullptr, log);
  if (!cfg.csv_path.empty()) {
    std::ofstream csv(cfg.csv_path);
    if (!csv) throw ParseError("--csv", "cannot write " + cfg.csv_path);
    write_coupling_csv(csv, r.coupling);
  }
  Output o(cfg, out);
  o.json(to_json(r));
  return ExitCode::ok;
}

int cmd_gap(const RunConfig& cfg, std::ostream& out, const Log& log) {
  require_positive(cfg.gap_tol, "--gap-tol");
  const Instance inst = load_instance(cfg);
  const ProjectionResult r = run_projection(cfg, inst, nullptr, log);
  if (!r.dual) throw SolverError("no dual certificate was produced");
  const double dual = evaluate_dual_objective(*r.dual, inst.mu, inst.nu, 0.0, r.projection.points());
  const PotentialReport pot = verify_potential_property(*r.dual, r.projection, r.vertex);
  const double gap = r.cost - dual;
  Json j{{"primal", r.cost},
         {"dual", dual},
         {"gap", gap},
         {"potentialPropertyResidual", pot.residual},
         {"interpolated", pot.interpolated}};
  Output o(cfg, out);
  o.json(j);
  return std::abs(gap) <= cfg.gap_tol ? ExitCode::ok : ExitCode::violation;
}

int cmd_check_order(const RunConfig& cfg, std::ostream& out, const Log& log) {
  const Instance inst = load_instance(cfg);
  OrderSpec spec{parse_order_kind(cfg.kind), std::nullopt};
  if (spec.kind == OrderKind::subharmonic) {
    if (cfg.grid_spec.empty()) throw ParseError("--grid", "required for the subharmonic order");
    spec.grid = parse_grid(cfg.grid_spec, inst.mu.dim());
  }
  const OrderCertificate cert = check_order(inst.mu, inst.nu, spec);
  const CertificateCheck check = verify_certificate(cert, inst.mu, inst.nu, spec);
  log.info(std::string("order ") + (cert.holds ? "holds" : "fails") + "; certificate " +
           (check.ok ? "verified" : "not verified") + ": " + check.detail);
  Json j = to_json(cert);
  j["verified"] = check.ok;
  j["residual"] = check.residual;
  Output o(cfg, out);
  o.json(j);
  if (!check.ok) throw SolverError("certificate failed re-verification: " + check.detail);
  return cert.holds ? ExitCode::ok : ExitCode::violation;
}

int cmd_transform(const RunConfig& cfg, std::ostream& out, const Log& log) {
  require_inputs(cfg, 1, 1);
  require_positive(cfg.envelope_tol, "--envelope-tol");
  const GridFunction f = grid_function_from_json(read_json_file(cfg.inputs[0]), "function");
  const Grid eval = cfg.grid_spec.empty() ? f.grid : parse_grid(cfg.grid_spec, f.grid.dim());
  EnvelopeOptions env;
  env.tolerance = cfg.envelope_tol;

  std::optional<GridFunction> result;
  Json extra = Json::object();
  if (cfg.op == "legendre") {
    result = legendre(f, eval);
  } else if (cfg.op == "q2") {
    result = q2(f, eval);
  } else if (cfg.op == "q2bar") {
    result = q2bar(f, eval);
  } else if (cfg.op == "q2e") {
    result = q2e(f, eval, env);
  } else if (cfg.op == "envelope") {
    if (!cfg.grid_spec.empty()) throw ParseError("--grid", "the envelope lives on the input grid");
    EnvelopeResult e = subharmonic_envelope_solve(f, env);
    extra["residual"] = e.residual;
    extra["sweeps"] = e.sweeps;
    result = std::move(e.envelope);
  } else {
    throw ParseError("--op", "unknown transform '" + cfg.op + "'");
  }
  log.info("transform " + cfg.op + " on " + std::to_string(eval.size()) + " nodes");
  Json j = to_json(*result);
  j["op"] = cfg.op;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  Output o(cfg, out);
  o.json(j);
  return ExitCode::ok;
}

Json map_report(const ProjectionResult& r, bool& ok) {
  const MapSample map = projection_map(r);
  Json j{{"direction", to_string(r.direction)},
         {"order", to_string(r.order)},
         {"map_pairs", map.size()},
         {"split", map.split},
         {"monotone", is_cyclically_monotone(map)},
         {"monotonicity_violation", monotonicity_violation(map)}};
  ok = ok && j["monotone"].get<bool>();
  if (r.order == OrderKind::convex && r.direction == Direction::backward) {
    const bool c = is_contraction_gradient(map);
    j["contraction"] = c;
    j["contraction_violation"] = contraction_violation(map);
    ok = ok && c;
  }
  if (r.order == OrderKind::convex && r.direction == Direction::forward) {
    const bool e = is_expansion_gradient(map);
    j["expansion"] = e;
    j["expansion_violation"] = expansion_violation(map);
    ok = ok && e;
  }
  if (r.order == OrderKind::subharmonic && r.direction == Direction::forward && r.grid && r.dual &&
      r.grid->dim() == 2) {
    const VolumeReport v = check_volume_expansion(r, r.grid->cell_volume());
    j["volume"] = Json{{"evaluable", v.evaluable},
                       {"det_fraction", v.det_fraction},
                       {"min_det", v.min_det},
                       {"density_checked", v.density_checked},
                       {"density_violations", v.density_violations},
                       {"max_density_ratio", v.max_density_ratio},
                       {"split_fraction", v.split_fraction},
                       {"conclusive", v.conclusive},
                       {"ok", v.ok}};
    ok = ok && (!v.conclusive || v.ok);
  }
  return j;
}

int cmd_characterize(const RunConfig& cfg, std::ostream& out, const Log& log) {
  require_inputs(cfg, 1, 2);
  std::vector<ProjectionResult> results;
  for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
    results.push_back(projection_from_json(read_json_file(cfg.inputs[i]),
                                           "result" + std::to_string(i)));
  }
  bool ok = true;
  Json j{{"results", Json::array()}};
  for (const auto& r : results) j["results"].push_back(map_report(r, ok));
  if (results.size() == 2) {
    const ProjectionResult* b = nullptr;
    const ProjectionResult* f = nullptr;
    for (const auto& r : results) (r.direction == Direction::backward ? b : f) = &r;
    if (!b || !f) throw ParseError("result1.direction", "expected one backward and one forward result");
    const InverseReport inv = check_inverse_relation(*b, *f);
    j["inverse"] = Json{{"backward_monotone", inv.backward_monotone},
                        {"forward_monotone", inv.forward_monotone},
                        {"joint_monotone", inv.joint_monotone},
                        {"matched", inv.matched},
                        {"max_displacement", inv.max_displacement},
                        {"spacing", inv.spacing},
                        {"conclusive", inv.conclusive},
                        {"ok", inv.ok}};
    ok = ok && (!inv.conclusive || inv.ok);
  }
  j["ok"] = ok;
  log.info(std::string("characterization ") + (ok ? "passed" : "failed"));
  Output o(cfg, out);
  o.json(j);
  return ok ? ExitCode::ok : ExitCode::violation;
}

// Two atoms, each split vertically and sideways into a pair straddling it.
// The optimal plan does not follow the martingale pairing, and its midpoint
// leaves the convex-order cone.
int cmd_demo_geodesic(const RunConfig& cfg, std::ostream& out, const Log& log) {
  auto p = [](double x, double y) { return Point{{x, y}}; };
  const DiscreteMeasure mu({p(-1, 0), p(1, 0)}, {0.5, 0.5});
  const DiscreteMeasure nu({p(-2.5, -3), p(0.5, 3), p(-0.5, -3), p(2.5, 3)}, {0.25, 0.25, 0.25, 0.25});
  const OrderCertificate endpoint = check_convex_order(mu, nu);
  const TransportResult ot = w2_squared(mu, nu);
  const DiscreteMeasure mid = displacement_interpolation(mu, nu, ot.coupling, 0.5);
  const OrderCertificate cert = check_convex_order(mu, mid);
  log.info("midpoint order check: " + std::string(cert.holds ? "holds" : "fails"));
  Json j{{"mu", to_json(mu)},
         {"nu", to_json(nu)},
         {"endpoint_order_holds", endpoint.holds},
         {"transport_cost", ot.cost},
         {"coupling", to_json(ot.coupling)},
         {"midpoint", to_json(mid)},
         {"order_holds", cert.holds},
         {"certificate", to_json(cert)}};
  Output o(cfg, out);
  o.json(j);
  return endpoint.holds && !cert.holds ? ExitCode::ok : ExitCode::violation;
}

int cmd_suite(const RunConfig& cfg, std::ostream& out, const Log& log) {
  SuiteConfig sc;
  sc.seed = cfg.seed;
  sc.order_pairs = cfg.pairs;
  sc.projections = cfg.projections;
  sc.transforms = cfg.transforms;
  require_positive(cfg.gap_tol, "--gap-tol");
  sc.gap_tolerance = cfg.gap_tol;
  const SuiteReport report = run_suite(sc);
  log.info("suite finished in " + std::to_string(report.seconds) + " s");
  Output o(cfg, out);
  write_suite_csv(o.stream(), report);
  if (!cfg.csv_path.empty()) {
    std::ofstream csv(cfg.csv_path);
    if (!csv) throw ParseError("--csv", "cannot write " + cfg.csv_path);
    write_suite_csv(csv, report);
  }
  return report.ok() ? ExitCode::ok : ExitCode::violation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Log log(err, log_level_from_env());
  RunConfig cfg;

  CLI::App app{"Wasserstein projections onto stochastic-order cones", "stochproj"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  auto add_inputs = [&](CLI::App* sub, const char* what) {
    sub->add_option("inputs", cfg.inputs, what)->required()->check(CLI::ExistingFile);
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out_path, "Write the result here instead of stdout");
  };
  auto add_projection_flags = [&](CLI::App* sub) {
    sub->add_option("--direction", cfg.direction, "backward or forward")
        ->check(CLI::IsMember({"backward", "forward"}));
    sub->add_option("--order", cfg.order, "convex or subharmonic")
        ->check(CLI::IsMember({"convex", "subharmonic"}));
    sub->add_option("--grid", cfg.grid_spec, "Candidate / potential grid as lo,hi,n");
    sub->add_option("--dilate", cfg.dilation, "Dilation of the default forward candidate box");
    sub->add_option("--fw-tol", cfg.fw_tol, "Relative Frank-Wolfe gap tolerance");
    sub->add_option("--envelope-tol", cfg.envelope_tol, "Subharmonic envelope residual tolerance");
    sub->add_flag("--canonical", cfg.canonical, "Pick a canonical optimum on degenerate faces");
  };

  auto* project = app.add_subcommand("project", "Backward or forward projection of mu.json / nu.json");
  add_inputs(project, "mu.json nu.json");
  add_projection_flags(project);
  add_out(project);
  project->add_option("--csv", cfg.csv_path, "Also write the coupling as CSV");
  project->add_option("--dump-lp", cfg.dump_lp_path, "Write every LP solved as sparse triplets");

  auto* gap = app.add_subcommand("gap", "Primal and dual values of one projection");
  add_inputs(gap, "mu.json nu.json");
  add_projection_flags(gap);
  add_out(gap);
  gap->add_option("--gap-tol", cfg.gap_tol, "Largest acceptable duality gap");

  auto* check = app.add_subcommand("check-order", "Decide mu <= nu and print a certificate");
  add_inputs(check, "mu.json nu.json");
  check->add_option("--kind", cfg.kind, "convex, subharmonic or trivial")
      ->check(CLI::IsMember({"convex", "subharmonic", "trivial"}));
  check->add_option("--grid", cfg.grid_spec, "Grid of the subharmonic order as lo,hi,n");
  add_out(check);

  auto* transform = app.add_subcommand("transform", "Apply a grid transform to a function JSON");
  add_inputs(transform, "function.json");
  transform->add_option("--op", cfg.op, "legendre, q2, q2bar, q2e or envelope")
      ->check(CLI::IsMember({"legendre", "q2", "q2bar", "q2e", "envelope"}));
  transform->add_option("--grid", cfg.grid_spec, "Evaluation grid as lo,hi,n");
  transform->add_option("--envelope-tol", cfg.envelope_tol, "Envelope residual tolerance");
  add_out(transform);

  auto* characterize = app.add_subcommand("characterize", "Map checks on projection result JSONs");
  add_inputs(characterize, "result.json [result.json]");
  add_out(characterize);

  auto* demo = app.add_subcommand("demo-geodesic", "Midpoint of a McCann geodesic leaving the cone");
  add_out(demo);

  auto* suite = app.add_subcommand("suite", "Seeded random-instance invariant battery (CSV)");
  suite->add_option("--seed", cfg.seed, "Random seed");
  suite->add_option("--pairs", cfg.pairs, "Order-check pairs");
  suite->add_option("--projections", cfg.projections, "Projection instances");
  suite->add_option("--transforms", cfg.transforms, "Transform grid functions");
  suite->add_option("--gap-tol", cfg.gap_tol, "Largest acceptable duality gap");
  suite->add_option("--csv", cfg.csv_path, "Also write the report here");
  add_out(suite);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ExitCode::ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ExitCode::ok;
  } catch (const CLI::ParseError& e) {
    log.error(e.what());
    err << "run with --help for usage\n";
    return ExitCode::usage;
  }

  try {
    if (project->parsed()) return cmd_project(cfg, out, log);
    if (gap->parsed()) return cmd_gap(cfg, out, log);
    if (check->parsed()) return cmd_check_order(cfg, out, log);
    if (transform->parsed()) return cmd_transform(cfg, out, log);
    if (characterize->parsed()) return cmd_characterize(cfg, out, log);
    if (demo->parsed()) return cmd_demo_geodesic(cfg, out, log);
    if (suite->parsed()) return cmd_suite(cfg, out, log);
  } catch (const ParseError& e) {
    log.error(e.what());
    return ExitCode::usage;
  } catch (const InvalidArgument& e) {
    log.error(e.what());
    return ExitCode::usage;
  } catch (const SolverError& e) {
    log.error(std::string("solver failure: ") + e.what());
    return ExitCode::solver_failure;
  } catch (const std::exception& e) {
    log.error(std::string("internal failure: ") + e.what());
    return ExitCode::solver_failure;
  }
  return ExitCode::usage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace stochproj::cli
