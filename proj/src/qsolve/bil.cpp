#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "detail.hpp"
#include "qmdp/log.hpp"
#include "qmdp/qsolve.hpp"

namespace qmdp {

namespace {

double rel_gap(double p, double d) { return std::abs(p - d) / (1.0 + std::abs(p)); }

// ---- open loop: variable pi on H_A ----

struct OpenState {
  RMat a;    // I - L_pi in Hermitian coordinates
  CMat rho;  // stationary state marginal
};

OpenState open_state(const QmdpInstance& q, const CMat& pi) {
  const double b = q.beta();
  const auto& k = q.channel().kraus();
  OpenState s;
  RMat l = detail::map_matrix(q.dimX(), [&](const CMat& r) { return CMat(b * kraus_apply(k, kron(r, pi))); });
  s.a = RMat::Identity(l.rows(), l.cols()) - l;
  RVec x = detail::solve_checked(s.a, (1.0 - b) * hermitian_coords(q.rho0().mat()), "bil_open");
  s.rho = from_hermitian_coords(x, q.dimX());
  return s;
}

double open_objective(const QmdpInstance& q, const CMat& pi) {
  return hs_inner(q.cost().mat(), kron(open_state(q, pi).rho, pi));
}

CMat open_gradient(const QmdpInstance& q, const CMat& pi) {
  OpenState s = open_state(q, pi);
  const int dx = q.dimX(), da = q.dimA();
  CMat h = contract_a(q.cost().mat(), pi, dx, da);
  RVec lam = detail::solve_checked(s.a.transpose(), hermitian_coords(h), "bil_open");
  CMat m = q.cost().mat() + q.beta() * kraus_adjoint_apply(q.channel().kraus(), from_hermitian_coords(lam, dx));
  CMat g = contract_x(m, s.rho, dx, da);
  return 0.5 * (g + g.adjoint());
}

// ---- closed loop: variable Z, the Schur multiplier of the policy ----

// K[y][x] = Tr(M_yx Z_xy), the adjoint of rho -> rho o Z.
CMat schur_adjoint(const CMat& m, const CMat& z, int dx, int da) {
  CMat k(dx, dx);
  for (int y = 0; y < dx; ++y)
    for (int x = 0; x < dx; ++x)
      k(y, x) = (m.block(y * da, x * da, da, da) * z.block(x * da, y * da, da, da)).trace();
  return k;
}

struct ClosedState {
  RMat a;
  CMat rho;
};

ClosedState closed_state(const QmdpInstance& q, const CMat& z) {
  const double b = q.beta();
  const int dx = q.dimX(), da = q.dimA();
  const auto& k = q.channel().kraus();
  ClosedState s;
  RMat l = detail::map_matrix(dx, [&](const CMat& r) { return CMat(b * kraus_apply(k, schur_apply(z, r, dx, da))); });
  s.a = RMat::Identity(l.rows(), l.cols()) - l;
  RVec x = detail::solve_checked(s.a, (1.0 - b) * hermitian_coords(q.rho0().mat()), "bil_closed");
  s.rho = from_hermitian_coords(x, dx);
  return s;
}

double closed_objective(const QmdpInstance& q, const CMat& z) {
  ClosedState s = closed_state(q, z);
  return hs_inner(q.cost().mat(), schur_apply(z, s.rho, q.dimX(), q.dimA()));
}

CMat closed_gradient(const QmdpInstance& q, const CMat& z) {
  const int dx = q.dimX(), da = q.dimA();
  ClosedState s = closed_state(q, z);
  CMat k0 = schur_adjoint(q.cost().mat(), z, dx, da);
  RVec eta = detail::solve_checked(s.a.transpose(), hermitian_coords(0.5 * (k0 + k0.adjoint())), "bil_closed");
  CMat lam = q.cost().mat() + q.beta() * kraus_adjoint_apply(q.channel().kraus(), from_hermitian_coords(eta, dx));
  CMat g = schur_apply(lam, s.rho.transpose(), dx, da);
  return 0.5 * (g + g.adjoint());
}

// ---- Frank-Wolfe with exact line search on the segment ----

struct FwRun {
  CMat x;
  double value = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool hit_max = false;
};

template <class Obj, class Grad, class Lmo>
FwRun frank_wolfe(CMat x, Obj obj, Grad grad, Lmo lmo, int max_outer, double tol, double lower) {
  FwRun r;
  r.x = std::move(x);
  r.value = obj(r.x);
  for (;;) {
    if (r.value - lower <= tol) break;
    if (r.iterations >= max_outer) {
      r.hit_max = true;
      break;
    }
    ++r.iterations;
    CMat g = grad(r.x);
    CMat s = lmo(g);
    r.gap = hs_inner(g, r.x) - hs_inner(g, s);
    if (r.gap <= tol) break;
    CMat d = s - r.x;
    auto phi = [&](double t) { return obj(r.x + t * d); };
    auto [t, ft] = boost::math::tools::brent_find_minima(phi, 0.0, 1.0, 40);
    double f1 = obj(s);
    if (f1 <= ft) {
      t = 1.0;
      ft = f1;
    }
    if (!(ft < r.value)) break;  // no descent along the segment
    r.x = t == 1.0 ? s : CMat(r.x + t * d);
    r.value = ft;
  }
  return r;
}

struct Start {
  std::string label;
  CMat x;
};

template <class Run>
SolveReport run_restarts(const std::vector<Start>& starts, Run run, double lower, bool lower_valid,
                         double tol, const char* name) {
  SolveReport rep;
  FwRun best;
  bool have = false;
  int total = 0;
  for (const auto& st : starts) {
    FwRun r = run(st.x, lower_valid ? lower : -std::numeric_limits<double>::infinity());
    total += r.iterations;
    std::ostringstream os;
    os << name << ": start " << st.label << " -> J = " << r.value << " after " << r.iterations
       << " iterations (fw gap " << r.gap << ")";
    log_message(1, os.str());
    if (!have || r.value < best.value) {
      best = std::move(r);
      have = true;
    }
    if (lower_valid && best.value - lower <= tol) break;
  }
  rep.primal_value = best.value;
  rep.dual_value = lower;
  rep.gap = rel_gap(best.value, lower);
  rep.optimal = lower_valid && best.value - lower <= tol;
  rep.status = rep.optimal ? "optimal" : (best.hit_max ? "max_iter" : "stationary");
  rep.iterations = total;
  rep.fw_gap = std::isfinite(best.gap) ? best.gap : 0.0;
  rep.sigma = trusted_hermitian(best.x);  // replaced by the caller
  return rep;
}

SdpOptions lower_bound_opts(double tol) {
  SdpOptions o;
  o.tol = std::max(1e-10, 0.1 * tol);
  o.max_iter = 300;
  return o;
}

void validate(const BilOptions& o) {
  if (o.restarts < 1) throw InvalidInput("bi-linear solve: restarts must be at least 1");
  if (o.max_outer < 0) throw InvalidInput("bi-linear solve: max_outer must be non-negative");
  if (!(o.tol > 0.0)) throw InvalidInput("bi-linear solve: tol must be positive");
}

}  // namespace

double bil_open_objective(const QmdpInstance& q, const HermitianOperator& pi) {
  if (pi.dim() != q.dimA()) throw DimensionError("bil_open_objective: pi must act on H_A");
  return open_objective(q, pi.mat());
}

HermitianOperator bil_open_gradient(const QmdpInstance& q, const HermitianOperator& pi) {
  if (pi.dim() != q.dimA()) throw DimensionError("bil_open_gradient: pi must act on H_A");
  return trusted_hermitian(open_gradient(q, pi.mat()));
}

double bil_closed_objective(const QmdpInstance& q, const CMat& z) {
  if (z.rows() != q.dimXA() || z.cols() != q.dimXA()) throw DimensionError("bil_closed_objective: Z dimension");
  return closed_objective(q, z);
}

HermitianOperator bil_closed_gradient(const QmdpInstance& q, const CMat& z) {
  if (z.rows() != q.dimXA() || z.cols() != q.dimXA()) throw DimensionError("bil_closed_gradient: Z dimension");
  return trusted_hermitian(closed_gradient(q, z));
}

SolveReport solve_bil_open(const QmdpInstance& q, const BilOptions& opts) {
  validate(opts);
  const int da = q.dimA();
  SolveReport sdp = solve_sdp_open(q, lower_bound_opts(opts.tol));
  const bool lower_valid = sdp.optimal;
  if (!lower_valid) warn("bil-open: relaxation solve returned " + sdp.status + "; optimality will not be certified");

  std::vector<Start> starts;
  if (sdp.sigma.dim() == q.dimXA())
    starts.push_back({"relaxation", detail::project_density(ptrace_x(sdp.sigma.mat(), q.dimX(), da))});
  starts.push_back({"maximally-mixed", CMat::Identity(da, da) / static_cast<double>(da)});
  Rng rng(opts.seed);
  for (int i = 1; i < opts.restarts; ++i) starts.push_back({"random-" + std::to_string(i), random_density(da, rng).mat()});

  auto obj = [&](const CMat& p) { return open_objective(q, p); };
  auto grad = [&](const CMat& p) { return open_gradient(q, p); };
  auto lmo = [&](const CMat& g) {
    auto ed = eig_h(g);
    return CMat(ed.vectors.col(0) * ed.vectors.col(0).adjoint());
  };
  auto run = [&](const CMat& x0, double lower) {
    return frank_wolfe(x0, obj, grad, lmo, opts.max_outer, opts.tol, lower);
  };
  SolveReport rep = run_restarts(starts, run, sdp.dual_value, lower_valid, opts.tol, "bil-open");

  DensityOperator pi(trusted_hermitian(detail::project_density(rep.sigma.mat())));
  DensityOperator rho = fixed_point_state(q, pi);
  rep.sigma = tensor(rho, pi);
  rep.xi = sdp.xi;
  rep.extracted_policy = OpenLoopPolicy::stationary(pi);
  RolloutResult ro = rollout(q, OpenLoopPolicy::stationary(pi), default_horizon(q));
  rep.rollout_value = (1.0 - q.beta()) * ro.discounted_cost;
  return rep;
}

SolveReport solve_bil_closed(const QmdpInstance& q, const BilOptions& opts) {
  validate(opts);
  const int dx = q.dimX(), da = q.dimA();
  SdpOptions sopts = lower_bound_opts(opts.tol);
  SolveReport sdp = solve_sdp_closed(q, sopts);
  const bool lower_valid = sdp.optimal;
  if (!lower_valid) warn("bil-closed: relaxation solve returned " + sdp.status + "; optimality will not be certified");

  std::vector<Start> starts;
  if (sdp.sigma.dim() == q.dimXA()) {
    if (auto z = extract_csp_gram(q, sdp.sigma, sopts)) starts.push_back({"relaxation", *z});
  }
  RMat uniform = RMat::Constant(dx, da, 1.0 / da);
  starts.push_back({"uniform-classical", classical_policy_channel(uniform).gram()});
  Rng rng(opts.seed);
  for (int i = 1; i < opts.restarts; ++i) starts.push_back({"random-" + std::to_string(i), random_csp_gram(dx, da, rng)});

  auto obj = [&](const CMat& z) { return closed_objective(q, z); };
  auto grad = [&](const CMat& z) { return closed_gradient(q, z); };
  auto lmo = [&](const CMat& g) { return csp_linear_min(dx, da, trusted_hermitian(g), sopts).z; };
  auto run = [&](const CMat& x0, double lower) {
    return frank_wolfe(x0, obj, grad, lmo, opts.max_outer, opts.tol, lower);
  };
  SolveReport rep = run_restarts(starts, run, sdp.dual_value, lower_valid, opts.tol, "bil-closed");

  CspPolicyChannel gamma = CspPolicyChannel::from_gram(normalize_gram(rep.sigma.mat(), dx, da), dx, da);
  rep.sigma = fixed_point_sigma(q, gamma);
  rep.xi = sdp.xi;
  RolloutResult ro = rollout(q, gamma, default_horizon(q));
  rep.rollout_value = (1.0 - q.beta()) * ro.discounted_cost;
  rep.extracted_policy = std::move(gamma);
  return rep;
}

}  // namespace qmdp
