#include "gromovlab/cli.hpp"

#include "gromovlab/barycenter.hpp"
#include "gromovlab/error.hpp"
#include "gromovlab/gw_solver.hpp"
#include "gromovlab/io.hpp"
#include "gromovlab/lgw.hpp"
#include "gromovlab/mgw_solver.hpp"
#include "gromovlab/oracle.hpp"
#include "gromovlab/parallel.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace gromovlab::cli {

namespace {

using io::Json;

// Flags shared by every subcommand. Only one subcommand runs per call, so all
// of them bind the same storage.
struct Common {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string params_path;
  bool json_errors = false;
  std::string out_path;
  std::string plan_path;
  bool lenient = false;

  std::optional<double> eta, anneal_factor, eta_floor, sinkhorn_tol, outer_tol, opt_tol;
  std::optional<int> outer_max, sinkhorn_max, restarts, vertex_starts;
  std::optional<bool> polish;
};

void add_common(CLI::App& app, Common& c) {
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads (default: GROMOVLAB_THREADS or machine parallelism)");
  app.add_option("--params", c.params_path, "Solver parameter JSON, overridden by explicit flags")
      ->check(CLI::ExistingFile);
  app.add_flag("--json-errors", c.json_errors, "Report errors as JSON on stderr");
  app.add_option("--out", c.out_path, "Write the result here instead of stdout");
  app.add_option("--dump-plan", c.plan_path, "Write the transport plan as JSON");
  app.add_flag("--lenient", c.lenient, "Skip the triangle inequality check on inputs");
  app.add_option("--eta", c.eta, "Initial entropic weight, relative to the mean linearized cost");
  app.add_option("--anneal-factor", c.anneal_factor, "Per-step eta multiplier");
  app.add_option("--eta-floor", c.eta_floor, "Smallest relative eta");
  app.add_option("--outer-max", c.outer_max, "Outer iteration budget");
  app.add_option("--sinkhorn-max", c.sinkhorn_max, "Sinkhorn iteration budget");
  app.add_option("--sinkhorn-tol", c.sinkhorn_tol, "Sinkhorn marginal tolerance");
  app.add_option("--outer-tol", c.outer_tol, "Relative objective change for outer convergence");
  app.add_option("--restarts", c.restarts, "Number of restarts");
  app.add_option("--vertex-starts", c.vertex_starts, "Extra starts from random polytope vertices");
  app.add_option("--polish", c.polish, "Conditional-gradient refinement (true/false)");
  app.add_option("--opt-tol", c.opt_tol, "Relative tolerance for anchor optimality");
}

SolverParams make_params(const Common& c) {
  SolverParams p;
  if (!c.params_path.empty()) io::merge_params(io::read_json_file(c.params_path), p);
  p.seed = c.seed;
  if (c.eta) p.eta = *c.eta;
  if (c.anneal_factor) p.anneal_factor = *c.anneal_factor;
  if (c.eta_floor) p.eta_floor = *c.eta_floor;
  if (c.outer_max) p.outer_max = *c.outer_max;
  if (c.sinkhorn_max) p.sinkhorn_max = *c.sinkhorn_max;
  if (c.sinkhorn_tol) p.sinkhorn_tol = *c.sinkhorn_tol;
  if (c.outer_tol) p.outer_tol = *c.outer_tol;
  if (c.restarts) p.restarts = *c.restarts;
  if (c.vertex_starts) p.vertex_starts = *c.vertex_starts;
  if (c.polish) p.polish = *c.polish;
  if (c.opt_tol) p.opt_tol = *c.opt_tol;
  p.validate();
  return p;
}

Strictness strictness(const Common& c) { return c.lenient ? Strictness::Lenient : Strictness::Strict; }

std::vector<MmSpace> read_spaces(const std::vector<std::string>& paths, const Common& c) {
  std::vector<MmSpace> spaces;
  for (const std::string& p : paths) spaces.push_back(io::read_space(p, strictness(c)));
  return spaces;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error(ErrorCode::ParseError, "cannot write " + path);
  file << text;
}

std::string render(const Json& j) { return j.dump(2) + "\n"; }

// Result of one subcommand: JSON printed to --out / stdout, plus the
// convergence flag that decides between exit codes 0 and 2.
struct Outcome {
  std::string text;
  bool converged = true;
  std::optional<Json> plan;
};

Outcome json_outcome(Json j, bool converged, std::optional<Json> plan = {}) {
  return {render(j), converged, std::move(plan)};
}

Json labels(const std::vector<MmSpace>& spaces) {
  Json out = Json::array();
  for (const MmSpace& s : spaces) out.push_back(s.label());
  return out;
}

struct Paths {
  std::string space;
  std::string x, y, ref;
  std::vector<std::string> spaces;
  std::string coeffs;
  std::vector<std::size_t> free_axes;
  std::string mode = "exact";
  double eps0 = 1.0;
  double factor = 0.5;
  int steps = 11;
  std::string bary_mode = "free";
  std::vector<double> rho;
  std::string support;
  std::string kind;
  double a = 1.0;
  Eigen::Index n = 8;
  Eigen::Index d = 2;
  std::string label;
  int resolution = 10001;
};

Outcome cmd_validate(const Paths& a, const Common& c) {
  const MmSpace s = io::read_space(a.space, strictness(c));
  return json_outcome({{"valid", true}, {"label", s.label()}, {"n", s.size()}}, true);
}

Outcome cmd_gw(const Paths& a, const Common& c, std::ostream&) {
  const MmSpace x = io::read_space(a.x, strictness(c));
  const MmSpace y = io::read_space(a.y, strictness(c));
  const GwResult r = solve_gw(x, y, make_params(c));
  Json j = {{"x", x.label()},
            {"y", y.label()},
            {"value", io::round12(r.value)},
            {"objective", io::round12(r.objective)},
            {"converged", r.converged},
            {"outer_iterations", r.outer_iterations}};
  return json_outcome(std::move(j), r.converged, io::to_json(r.plan));
}

Outcome cmd_mgw(const Paths& a, const Common& c, std::ostream&) {
  const std::vector<MmSpace> spaces = read_spaces(a.spaces, c);
  const auto n = static_cast<Eigen::Index>(spaces.size());
  PairwiseCoefficients coeffs = PairwiseCoefficients::constant(n, 0.5);
  if (!a.coeffs.empty()) {
    const Json j = io::read_json_file(a.coeffs);
    coeffs.c = io::matrix_from_json(j.is_object() && j.contains("c") ? j["c"] : j);
  }
  coeffs.validate(n);
  std::vector<bool> constrained(spaces.size(), true);
  for (std::size_t k : a.free_axes) {
    if (k >= spaces.size()) throw Error(ErrorCode::IndexOutOfRange, "free axis out of range");
    constrained[k] = false;
  }
  const MgwResult r = solve_mgw(spaces, coeffs, make_params(c), constrained);
  Json marginals = Json::array();
  for (std::size_t k = 0; k < r.plan.rank(); ++k) marginals.push_back(io::to_json(r.plan.mass().axis_marginal(k)));
  Json j = {{"spaces", labels(spaces)},
            {"value", io::round12(r.value)},
            {"marginals", marginals},
            {"converged", r.converged},
            {"outer_iterations", r.outer_iterations}};
  return json_outcome(std::move(j), r.converged, io::to_json(r.plan));
}

LgwMode parse_mode(const std::string& mode) { return mode == "maps" ? LgwMode::Maps : LgwMode::Exact; }

Outcome cmd_lgw(const Paths& a, const Common& c, std::ostream&) {
  const MmSpace s = io::read_space(a.ref, strictness(c));
  const MmSpace x = io::read_space(a.x, strictness(c));
  const MmSpace y = io::read_space(a.y, strictness(c));
  const SolverParams params = make_params(c);
  const GwResult sx = solve_gw(s, x, params);
  const GwResult sy = solve_gw(s, y, params);
  Json j = {{"ref", s.label()}, {"x", x.label()}, {"y", y.label()}, {"mode", a.mode}};
  const bool anchors_converged = sx.converged && sy.converged;
  j["gw_sx"] = io::round12(sx.value);
  j["gw_sy"] = io::round12(sy.value);
  if (parse_mode(a.mode) == LgwMode::Maps) {
    const DiscreteMap t1 = barycentric_map(sx.plan, MapMode::ModeArgmax, x);
    const DiscreteMap t2 = barycentric_map(sy.plan, MapMode::ModeArgmax, y);
    j["value"] = io::round12(lgw_via_maps(s, x, y, t1, t2));
    j["converged"] = anchors_converged;
    return json_outcome(std::move(j), anchors_converged);
  }
  const LgwResult r = solve_lgw_exact(s, x, y, sx.plan, sy.plan, params, {sx.objective, sy.objective});
  const bool converged = anchors_converged && r.converged;
  j["value"] = io::round12(r.value);
  j["residual_sx"] = io::round12(r.residual_sx);
  j["residual_sy"] = io::round12(r.residual_sy);
  j["converged"] = converged;
  std::optional<Json> plan;
  if (r.plan3) plan = io::to_json(*r.plan3);
  return json_outcome(std::move(j), converged, std::move(plan));
}

Outcome cmd_lgw_matrix(const Paths& a, const Common& c, std::ostream&) {
  const MmSpace s = io::read_space(a.ref, strictness(c));
  const std::vector<MmSpace> spaces = read_spaces(a.spaces, c);
  const LgwMatrix m = lgw_matrix(s, spaces, make_params(c), parse_mode(a.mode), c.threads);
  Json failures = Json::array();
  for (const PairFailure& f : m.failures) failures.push_back({{"i", f.i}, {"j", f.j}, {"message", f.message}});
  Json j = {{"ref", s.label()},
            {"labels", labels(spaces)},
            {"mode", a.mode},
            {"values", io::to_json(m.values)},
            {"failures", failures}};
  return json_outcome(std::move(j), m.failures.empty());
}

Outcome cmd_sweep(const Paths& a, const Common& c, std::ostream& err) {
  const MmSpace s = io::read_space(a.ref, strictness(c));
  const MmSpace x = io::read_space(a.x, strictness(c));
  const MmSpace y = io::read_space(a.y, strictness(c));
  const SweepResult r = epsilon_sweep(s, x, y, {a.eps0, a.factor, a.steps}, make_params(c));
  std::ostringstream csv;
  write_sweep_csv(csv, r.records);
  if (r.error) err << "eps-sweep stopped early: " << *r.error << "\n";
  return {csv.str(), r.converged && !r.error, std::nullopt};
}

Matrix read_support(const std::string& path, std::ostream& err) {
  const Json j = io::read_json_file(path);
  if (!j.is_object() || !j.contains("distance_matrix")) {
    throw Error(ErrorCode::ParseError, "support file needs a distance_matrix");
  }
  if (j.contains("weights")) err << "warning: support weights are ignored\n";
  RawSpace raw;
  raw.dist = io::matrix_from_json(j["distance_matrix"]);
  raw.weights = uniform_weights(raw.dist->rows());
  validate(raw);
  return *raw.dist;
}

Outcome cmd_barycenter(const Paths& a, const Common& c, std::ostream& err) {
  const std::vector<MmSpace> spaces = read_spaces(a.spaces, c);
  const auto n = static_cast<Eigen::Index>(spaces.size());
  BarycenterWeights rho = BarycenterWeights::uniform(n);
  if (!a.rho.empty()) {
    if (static_cast<Eigen::Index>(a.rho.size()) != n) {
      throw Error(ErrorCode::LengthMismatch, "--rho needs one weight per input");
    }
    rho.rho = Eigen::Map<const Vector>(a.rho.data(), n);
  }
  const SolverParams params = make_params(c);
  if (a.bary_mode == "fixed") {
    if (a.support.empty()) throw Error(ErrorCode::ParseError, "fixed mode needs --support");
    const FixedBarycenter r = fixed_support_barycenter(spaces, rho, read_support(a.support, err), params);
    Json j = {{"mode", "fixed"},
              {"sigma_star", io::to_json(r.sigma_star)},
              {"mgw_value", io::round12(r.mgw_value)},
              {"barycenter", io::to_json(r.bary)},
              {"converged", r.converged}};
    return json_outcome(std::move(j), r.converged, io::to_json(r.plan));
  }
  const FreeBarycenter r = free_support_barycenter(spaces, rho, params);
  const double objective = barycenter_objective(r.bary, spaces, rho, params, c.threads);
  Json j = {{"mode", "free"},
            {"mgw_value", io::round12(r.mgw_value)},
            {"objective", io::round12(objective)},
            {"pruned_mass", io::round12(r.pruned_mass)},
            {"barycenter", io::to_json(r.bary)},
            {"converged", r.converged}};
  return json_outcome(std::move(j), r.converged, io::to_json(r.plan));
}

MmSpace relabel(const MmSpace& s, const std::string& label) {
  if (label.empty()) return s;
  RawSpace raw = s.to_raw();
  raw.label = label;
  return validate(raw);
}

Outcome cmd_gen(const Paths& a, const Common& c, std::ostream&) {
  MmSpace s = single_point_space();
  if (a.kind == "two_point") {
    s = two_point(a.a);
  } else if (a.kind == "circle") {
    s = circle(a.n);
  } else if (a.kind == "random_cloud") {
    s = random_cloud(c.seed, a.n, a.d);
  } else {
    s = single_point_space();
  }
  return json_outcome(io::to_json(relabel(s, a.label)), true);
}

// Brute-force references for the small fixtures used by the test suite.
Outcome cmd_oracle(const Paths& a, const Common&, std::ostream&) {
  Json fixtures = Json::array();
  auto add = [&](const MmSpace& x, const MmSpace& y, int resolution) {
    fixtures.push_back({{"x", io::to_json(x)},
                        {"y", io::to_json(y)},
                        {"resolution", resolution},
                        {"gw2", io::round12(oracle::brute_gw(x, y, resolution))}});
  };
  add(two_point(1.0), two_point(3.0), a.resolution);
  Vector skew(2);
  skew << 0.3, 0.7;
  add(two_point(1.0, skew), two_point(2.0), a.resolution);
  add(two_point(0.5, skew), two_point(4.0, Vector(skew.reverse())), a.resolution);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) add(random_cloud(seed, 3, 2), random_cloud(seed + 100, 3, 2), 41);
  return json_outcome({{"fixtures", fixtures}}, true);
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConvergence:
    case ErrorCode::NumericalOverflow:
    case ErrorCode::AnchorNotOptimal:
    case ErrorCode::EmptySupport:
      return kExitNonConvergence;
    default:
      return kExitInvalidInput;
  }
}

void report(std::ostream& err, bool as_json, std::string_view code, const std::string& message) {
  if (as_json) {
    err << Json{{"error", code}, {"message", message}}.dump() << "\n";
  } else {
    err << "error: " << message << "\n";
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  bool json_errors = false;
  for (int i = 1; i < argc; ++i) json_errors = json_errors || std::string_view(argv[i]) == "--json-errors";

  CLI::App app{"Gromov-Wasserstein toolkit for finite metric measure spaces", "gromovlab"};
  app.require_subcommand(1);
  Common common;
  common.threads = default_threads();
  Paths a;
  std::function<Outcome(std::ostream&)> action;

  auto sub = [&](const std::string& name, const std::string& help, auto body) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(*cmd, common);
    cmd->callback([&, body] { action = [&, body](std::ostream& e) { return body(a, common, e); }; });
    return cmd;
  };

  CLI::App* validate_cmd = sub("validate", "Check a space file", [](const Paths& p, const Common& c, std::ostream&) {
    return cmd_validate(p, c);
  });
  validate_cmd->add_option("space", a.space, "Space JSON")->required()->check(CLI::ExistingFile);

  CLI::App* gw = sub("gw", "GW distance between two spaces", cmd_gw);
  gw->add_option("--x", a.x, "First space")->required()->check(CLI::ExistingFile);
  gw->add_option("--y", a.y, "Second space")->required()->check(CLI::ExistingFile);

  CLI::App* mgw = sub("mgw", "Multi-marginal GW", cmd_mgw);
  mgw->add_option("--spaces", a.spaces, "Space files, one per axis")->required()->check(CLI::ExistingFile);
  mgw->add_option("--coeffs", a.coeffs, "JSON matrix of pair coefficients (default 1/2)")->check(CLI::ExistingFile);
  mgw->add_option("--free", a.free_axes, "Axes without a marginal constraint");

  auto modes = CLI::IsMember({"exact", "maps"});
  CLI::App* lgw = sub("lgw", "Linear GW through a reference space", cmd_lgw);
  lgw->add_option("--ref", a.ref, "Reference space")->required()->check(CLI::ExistingFile);
  lgw->add_option("--x", a.x, "First space")->required()->check(CLI::ExistingFile);
  lgw->add_option("--y", a.y, "Second space")->required()->check(CLI::ExistingFile);
  lgw->add_option("--mode", a.mode, "exact or maps")->check(modes)->capture_default_str();

  CLI::App* matrix = sub("lgw-matrix", "Pairwise LGW values", cmd_lgw_matrix);
  matrix->add_option("--ref", a.ref, "Reference space")->required()->check(CLI::ExistingFile);
  matrix->add_option("--inputs", a.spaces, "Space files")->required()->check(CLI::ExistingFile);
  matrix->add_option("--mode", a.mode, "exact or maps")->check(modes)->capture_default_str();

  CLI::App* sweep = sub("eps-sweep", "MGW eps-sweep towards LGW, as CSV", cmd_sweep);
  sweep->add_option("--ref", a.ref, "Reference space")->required()->check(CLI::ExistingFile);
  sweep->add_option("--x", a.x, "First space")->required()->check(CLI::ExistingFile);
  sweep->add_option("--y", a.y, "Second space")->required()->check(CLI::ExistingFile);
  sweep->add_option("--eps0", a.eps0, "First eps")->capture_default_str()->check(CLI::PositiveNumber);
  sweep->add_option("--factor", a.factor, "eps multiplier per step")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sweep->add_option("--steps", a.steps, "Number of steps")->capture_default_str()->check(CLI::PositiveNumber);

  CLI::App* bary = sub("barycenter", "GW barycenter", cmd_barycenter);
  bary->add_option("--mode", a.bary_mode, "free or fixed")->check(CLI::IsMember({"free", "fixed"}))->capture_default_str();
  bary->add_option("--inputs", a.spaces, "Space files")->required()->check(CLI::ExistingFile);
  bary->add_option("--rho", a.rho, "Barycenter weights (default uniform)");
  bary->add_option("--support", a.support, "Support distance matrix JSON (fixed mode)")->check(CLI::ExistingFile);

  CLI::App* gen = sub("gen", "Generate a fixture space", cmd_gen);
  gen->add_option("kind", a.kind, "two_point, circle, random_cloud or single_point")
      ->required()
      ->check(CLI::IsMember({"two_point", "circle", "random_cloud", "single_point"}));
  gen->add_option("--a", a.a, "two_point distance")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--n", a.n, "Number of atoms")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--d", a.d, "random_cloud dimension")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--label", a.label, "Label of the generated space");

  CLI::App* orc = sub("oracle", "", cmd_oracle);
  orc->group("");
  orc->add_option("--fixtures", common.out_path, "Fixture file to write");
  orc->add_option("--resolution", a.resolution, "Grid points per free axis")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    if (json_errors) {
      report(err, true, "UsageError", e.what());
      return kExitInvalidInput;
    }
    app.exit(e, out, err);
    return kExitInvalidInput;
  }
  json_errors = common.json_errors;

  try {
    Outcome result = action(err);
    write_text(common.out_path, result.text, out);
    if (!common.plan_path.empty()) {
      if (!result.plan) throw Error(ErrorCode::NotApplicable, "this subcommand has no plan to dump");
      write_text(common.plan_path, render(*result.plan), out);
    }
    if (!result.converged) {
      report(err, json_errors, "NonConvergence", "solver did not converge; best iterate reported");
      return kExitNonConvergence;
    }
    return kExitOk;
  } catch (const Error& e) {
    report(err, json_errors, to_string(e.code()), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    report(err, json_errors, "InternalError", e.what());
    return kExitInternal;
  }
}

}  // namespace gromovlab::cli
