#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "qmdp/io.hpp"
#include "qmdp/log.hpp"
#include "qmdp/qsolve.hpp"

namespace qmdp::cli {

namespace {

using io::json;

struct SolveArgs {
  std::string path;
  std::string mode;
  std::string output;
  std::string policy_path;
  int net_resolution = 4;
  int horizon = 0;
  int restarts = 8;
  int max_outer = 300;
  int probes = 20;
  double tol = 1e-8;
  double check_tol = 1e-6;
  std::uint64_t seed = 42;
  bool no_timings = false;
};

struct Outcome {
  json report;
  bool certified = false;
  std::vector<std::pair<std::string, std::string>> table;
};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

void require_finite(const json& j, const std::string& where) {
  if (j.is_number_float() && !std::isfinite(j.get<double>()))
    throw NumericalError("non-finite value in report field " + where);
  if (j.is_object())
    for (auto it = j.begin(); it != j.end(); ++it) require_finite(it.value(), where + "." + it.key());
  if (j.is_array())
    for (size_t i = 0; i < j.size(); ++i) require_finite(j[i], where + "[" + std::to_string(i) + "]");
}

std::vector<DensityOperator> probe_states(int dimX, int count, std::uint64_t seed) {
  std::vector<DensityOperator> probes;
  for (int x = 0; x < dimX; ++x) probes.push_back(DensityOperator::basis_state(dimX, x));
  probes.push_back(DensityOperator::maximally_mixed(dimX));
  Rng rng(seed);
  for (int i = 0; i < count; ++i) probes.push_back(random_density(dimX, rng));
  return probes;
}

void sdp_fields(Outcome& o, const SolveReport& r) {
  o.report["status"] = r.status;
  o.report["primal_value"] = r.primal_value;
  o.report["dual_value"] = r.dual_value;
  o.report["gap"] = r.gap;
  o.report["iterations"] = r.iterations;
  o.certified = r.optimal;
  o.table.push_back({"status", r.status});
  o.table.push_back({"primal value", num(r.primal_value)});
  o.table.push_back({"dual value", num(r.dual_value)});
  o.table.push_back({"relative gap", num(r.gap)});
}

Outcome mode_sdp(const QmdpInstance& q, const SolveArgs& a, bool closed, bool dual) {
  Outcome o;
  SdpOptions so;
  so.tol = a.tol;
  SolveReport r = closed ? solve_sdp_closed(q, so) : solve_sdp_open(q, so);
  sdp_fields(o, r);
  o.report["xi"] = io::matrix_to_json(r.xi.mat());
  HermitianOperator slack = q.cost() - (closed ? op_Tw_adj(q, r.xi) : op_T_adj(q, r.xi));
  double margin = min_eig(slack);
  o.report["dual_feasibility_margin"] = margin;
  if (dual) {
    o.table.push_back({"dual feasibility", num(margin)});
  } else {
    o.report["sigma"] = io::matrix_to_json(r.sigma.mat());
  }
  o.report["value_per_stage"] = r.primal_value / (1.0 - q.beta());
  return o;
}

json rollout_check(const QmdpInstance& q, const Policy& pol, double j_value, bool* within) {
  const int t = default_horizon(q);
  RolloutResult ro = rollout(q, pol, t);
  const double scale = 1.0 - q.beta();
  const double v = scale * ro.discounted_cost;
  const double bound = scale * ro.cost_tail_bound;
  *within = std::abs(v - j_value) <= bound + 1e-9 * (1.0 + std::abs(j_value));
  return json{{"horizon", t}, {"value", v}, {"tail_bound", bound}, {"reference", j_value}, {"within_bound", *within}};
}

Outcome mode_bil(const QmdpInstance& q, const SolveArgs& a, bool closed) {
  Outcome o;
  BilOptions bo;
  bo.tol = a.tol;
  bo.restarts = a.restarts;
  bo.max_outer = a.max_outer;
  bo.seed = a.seed;
  SolveReport r = closed ? solve_bil_closed(q, bo) : solve_bil_open(q, bo);
  sdp_fields(o, r);
  o.report["fw_gap"] = r.fw_gap;
  o.report["restarts"] = a.restarts;
  o.table.push_back({"frank-wolfe gap", num(r.fw_gap)});
  bool within = false;
  if (closed) {
    const auto& g = std::get<CspPolicyChannel>(r.extracted_policy);
    o.report["policy"] = io::policy_to_json(g);
    o.report["rollout"] = rollout_check(q, g, r.primal_value, &within);
  } else {
    const auto& p = std::get<OpenLoopPolicy>(r.extracted_policy);
    o.report["policy"] = io::policy_to_json(p);
    o.report["rollout"] = rollout_check(q, p, r.primal_value, &within);
  }
  o.table.push_back({"rollout value", num(o.report["rollout"]["value"].get<double>())});
  o.table.push_back({"rollout consistent", within ? "yes" : "no"});
  o.certified = r.optimal && within;
  return o;
}

Outcome mode_value_net(const QmdpInstance& q, const SolveArgs& a) {
  Outcome o;
  NetOptions no;
  no.sdp.tol = a.tol;
  ValueNet net = value_net_open(q, a.net_resolution, no);
  const double r = net.covering_radius_estimate;
  const double bound = hs_norm(q.cost()) * std::sqrt(static_cast<double>(q.dimX())) * r / (1.0 - q.beta());
  const double v0 = net.evaluate(q.rho0().op());
  o.report["status"] = net.dropped == 0 ? "optimal" : "incomplete";
  o.report["net"] = json{{"resolution", net.resolution},
                         {"size", net.points.size()},
                         {"dropped", net.dropped},
                         {"covering_radius_estimate", r},
                         {"covering_radius_empirical", net.covering_radius_empirical},
                         {"radius_certified", net.radius_certified}};
  o.report["error_bound"] = bound;
  o.report["value_at_rho0"] = v0;
  json duals = json::array();
  for (size_t i = 0; i < net.points.size(); ++i)
    duals.push_back(json{{"point", io::matrix_to_json(net.points[i].mat())},
                         {"xi", io::matrix_to_json(net.xis[i].mat())},
                         {"dual_value", net.dual_values[i]}});
  o.report["duals"] = std::move(duals);
  o.certified = net.dropped == 0;
  o.table.push_back({"net size", std::to_string(net.points.size())});
  o.table.push_back({"covering radius", num(r)});
  o.table.push_back({"error bound", num(bound)});
  o.table.push_back({"V_n(rho0)", num(v0)});
  return o;
}

Outcome mode_value_closed(const QmdpInstance& q, const SolveArgs& a) {
  Outcome o;
  SdpOptions so;
  so.tol = a.tol;
  ClosedValue v = value_closed(q, so);
  o.report["status"] = "optimal";
  o.report["diag_xi"] = io::real_vector_to_json(v.diag_xi);
  o.report["value_at_rho0"] = v.evaluate(q.rho0().op());
  o.certified = true;
  std::ostringstream os;
  for (int i = 0; i < v.diag_xi.size(); ++i) os << (i ? " " : "") << num(v.diag_xi(i));
  o.table.push_back({"diag xi", os.str()});
  o.table.push_back({"V_w(rho0)", num(v.evaluate(q.rho0().op()))});
  return o;
}

Outcome mode_rollout(const QmdpInstance& q, const SolveArgs& a) {
  Outcome o;
  Policy pol = OpenLoopPolicy::stationary(DensityOperator::maximally_mixed(q.dimA()));
  if (!a.policy_path.empty()) pol = io::policy_from_json(io::read_json_file(a.policy_path), q.dimX(), q.dimA());
  const int t = a.horizon > 0 ? a.horizon : default_horizon(q);
  RolloutResult ro = rollout(q, pol, t);
  const double scale = 1.0 - q.beta();
  o.report["horizon"] = t;
  o.report["discounted_cost"] = ro.discounted_cost;
  o.report["value"] = scale * ro.discounted_cost;
  o.report["cost_tail_bound"] = ro.cost_tail_bound;
  o.report["occupation_tail_bound"] = ro.occupation_tail_bound;
  o.report["occupation"] = io::matrix_to_json(ro.occupation.mat());
  std::optional<double> ref;
  if (const auto* ol = std::get_if<OpenLoopPolicy>(&pol)) {
    o.report["policy"] = io::policy_to_json(*ol);
    if (ol->pis.size() == 1) ref = bil_open_objective(q, ol->pis[0].op());
  } else {
    const auto& g = std::get<CspPolicyChannel>(pol);
    o.report["policy"] = io::policy_to_json(g);
    ref = hs_inner(q.cost(), fixed_point_sigma(q, g));
  }
  o.table.push_back({"horizon", std::to_string(t)});
  o.table.push_back({"value", num(scale * ro.discounted_cost)});
  o.table.push_back({"tail bound", num(scale * ro.cost_tail_bound)});
  if (ref) {
    const double diff = std::abs(scale * ro.discounted_cost - *ref);
    const bool within = diff <= scale * ro.cost_tail_bound + 1e-9 * (1.0 + std::abs(*ref));
    o.report["fixed_point_value"] = *ref;
    o.report["within_bound"] = within;
    o.report["status"] = within ? "optimal" : "inconsistent";
    o.certified = within;
    o.table.push_back({"fixed-point value", num(*ref)});
  } else {
    o.report["status"] = "unchecked";
    o.certified = true;
  }
  return o;
}

Outcome mode_check(const QmdpInstance& q, const SolveArgs& a) {
  Outcome o;
  SdpOptions so;
  so.tol = std::min(a.tol, 1e-9);
  auto probes = probe_states(q.dimX(), a.probes, a.seed);
  auto encode = [](const AssumptionReport& r) {
    return json{{"status", to_string(r.status)},
                {"dual_margin", r.dual_margin},
                {"worst_probe_residual", r.worst_probe_residual},
                {"schmidt_rank", r.schmidt_rank},
                {"kernel_condition", r.kernel_condition}};
  };
  SolveReport open = solve_sdp_open(q, so);
  SolveReport closed = solve_sdp_closed(q, so);
  AssumptionReport a1 = check_assumption1(q, open.xi, probes, a.check_tol);
  AssumptionReport a2 = check_assumption2(q, closed.xi, probes, a.check_tol);
  o.report["assumption1"] = encode(a1);
  o.report["assumption2"] = encode(a2);
  o.report["probes"] = probes.size();
  o.report["check_tol"] = a.check_tol;
  const bool both = a1.status == AssumptionStatus::certified && a2.status == AssumptionStatus::certified;
  o.report["status"] = both ? "certified" : "not-certified";
  o.certified = both;
  o.table.push_back({"assumption 1", to_string(a1.status)});
  o.table.push_back({"assumption 2", to_string(a2.status)});
  o.table.push_back({"worst residual 1", num(a1.worst_probe_residual)});
  o.table.push_back({"worst residual 2", num(a2.worst_probe_residual)});
  return o;
}

void print_table(std::ostream& os, const std::string& mode, const Outcome& o) {
  os << std::left << std::setw(22) << "mode" << mode << "\n";
  for (const auto& [k, v] : o.table) os << std::left << std::setw(22) << k << v << "\n";
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  try {
    io::ProblemFile f = io::load_problem(path);
    out << "valid " << f.kind << " instance (digest " << f.digest << ")\n";
    return ok;
  } catch (const io::ValidationError& e) {
    err << "invalid: " << e.what() << "\n";
    return invalid;
  } catch (const io::ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return bad_input;
  } catch (const io::IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return bad_input;
  }
}

int emit(const json& j, const std::string& output, std::ostream& out) {
  std::string text = j.dump(2) + "\n";
  if (output.empty()) {
    out << text;
  } else {
    io::write_atomic(output, text);
  }
  return ok;
}

int cmd_embed(const std::string& path, const std::vector<double>& mu0_arg, const std::string& output,
              std::ostream& out, std::ostream& err) {
  io::ProblemFile f;
  try {
    f = io::load_problem(path);
  } catch (const io::ValidationError& e) {
    err << "invalid: " << e.what() << "\n";
    return invalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return bad_input;
  }
  if (!f.classical) {
    err << "embed-classical: input is not a classical-mdp file\n";
    return bad_input;
  }
  const int nx = f.classical->nx();
  RVec mu0 = RVec::Constant(nx, 1.0 / nx);
  if (!mu0_arg.empty()) {
    if (static_cast<int>(mu0_arg.size()) != nx) {
      err << "embed-classical: --mu0 needs " << nx << " entries\n";
      return bad_input;
    }
    mu0 = Eigen::Map<const RVec>(mu0_arg.data(), nx);
  } else if (f.mu0) {
    mu0 = *f.mu0;
  }
  try {
    return emit(io::instance_to_json(embed_to_qmdp(*f.classical, mu0)), output, out);
  } catch (const io::IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return bad_input;
  } catch (const std::invalid_argument& e) {
    err << "invalid: " << e.what() << "\n";
    return invalid;
  }
}

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  io::ProblemFile f;
  try {
    f = io::load_problem(a.path);
  } catch (const io::ValidationError& e) {
    err << "invalid: " << e.what() << "\n";
    return invalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return bad_input;
  }
  std::optional<QmdpInstance> q = f.qmdp;
  if (!q) {
    const int nx = f.classical->nx();
    q = embed_to_qmdp(*f.classical, f.mu0 ? *f.mu0 : RVec::Constant(nx, 1.0 / nx));
  }
  Outcome o;
  try {
    if (a.mode == "open-sdp") o = mode_sdp(*q, a, false, false);
    else if (a.mode == "open-dual") o = mode_sdp(*q, a, false, true);
    else if (a.mode == "closed-sdp") o = mode_sdp(*q, a, true, false);
    else if (a.mode == "closed-dual") o = mode_sdp(*q, a, true, true);
    else if (a.mode == "bil-open") o = mode_bil(*q, a, false);
    else if (a.mode == "bil-closed") o = mode_bil(*q, a, true);
    else if (a.mode == "value-net") o = mode_value_net(*q, a);
    else if (a.mode == "value-closed") o = mode_value_closed(*q, a);
    else if (a.mode == "rollout") o = mode_rollout(*q, a);
    else if (a.mode == "check-assumptions") o = mode_check(*q, a);
    else {
      err << "unknown mode " << a.mode << "\n";
      return bad_input;
    }
    json head{{"command", "solve"}, {"mode", a.mode}, {"instance_digest", f.digest}, {"tol", a.tol}};
    if (f.classical) head["embedded_from"] = "classical-mdp";
    o.report.update(head);
    if (!a.no_timings)
      o.report["timings"] = json{
          {"total_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    require_finite(o.report, "report");
  } catch (const io::IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return bad_input;
  } catch (const io::ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return bad_input;
  } catch (const std::exception& e) {
    err << "solver failure: " << e.what() << "\n";
    return not_certified;
  }
  try {
    if (a.output.empty()) {
      out << o.report.dump(2) << "\n";
      print_table(err, a.mode, o);
    } else {
      io::write_atomic(a.output, o.report.dump(2) + "\n");
      print_table(out, a.mode, o);
    }
  } catch (const io::IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return bad_input;
  }
  return o.certified ? ok : not_certified;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"quantum MDP solver"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "progress messages on stderr");

  std::string vpath;
  auto* val = app.add_subcommand("validate", "check a problem file");
  val->add_option("path", vpath, "problem file")->required();

  std::string epath, eout;
  std::vector<double> mu0;
  auto* emb = app.add_subcommand("embed-classical", "write the quantum embedding of a classical MDP");
  emb->add_option("path", epath, "classical-mdp file")->required();
  emb->add_option("--mu0", mu0, "initial distribution")->delimiter(',');
  emb->add_option("-o,--output", eout, "output path (stdout if omitted)");

  SolveArgs sa;
  auto* sol = app.add_subcommand("solve", "run a solver");
  sol->add_option("path", sa.path, "problem file")->required();
  sol->add_option("--mode", sa.mode, "solver mode")
      ->required()
      ->check(CLI::IsMember({"open-sdp", "open-dual", "closed-sdp", "closed-dual", "bil-open", "bil-closed",
                             "value-net", "value-closed", "rollout", "check-assumptions"}));
  sol->add_option("--net-resolution", sa.net_resolution, "value net resolution n")->check(CLI::PositiveNumber);
  sol->add_option("--horizon", sa.horizon, "rollout horizon (tail rule if omitted)")->check(CLI::PositiveNumber);
  sol->add_option("--restarts", sa.restarts, "bi-linear restarts")->check(CLI::PositiveNumber);
  sol->add_option("--max-outer", sa.max_outer, "Frank-Wolfe iterations per restart")->check(CLI::NonNegativeNumber);
  sol->add_option("--tol", sa.tol, "solver tolerance")->check(CLI::PositiveNumber);
  sol->add_option("--check-tol", sa.check_tol, "assumption check tolerance")->check(CLI::PositiveNumber);
  sol->add_option("--probes", sa.probes, "random probe states for assumption checks")->check(CLI::NonNegativeNumber);
  sol->add_option("--seed", sa.seed, "random seed");
  sol->add_option("--policy", sa.policy_path, "policy file for rollout");
  sol->add_option("-o,--output", sa.output, "report path (stdout if omitted)");
  sol->add_flag("--no-timings", sa.no_timings, "omit timings from the report");
  sol->add_flag("--verbose", verbose, "progress messages on stderr");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return bad_input;
  }
  set_verbosity(verbose ? 1 : 0);
  if (*val) return cmd_validate(vpath, out, err);
  if (*emb) return cmd_embed(epath, mu0, eout, out, err);
  return cmd_solve(sa, out, err);
}

}  // namespace qmdp::cli
