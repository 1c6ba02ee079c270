#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/tools/minima.hpp>

#include "qmdp/log.hpp"
#include "qmdp/qsolve.hpp"

namespace qmdp {

namespace {

const CMat& pauli(int k) {
  static const CMat s[3] = {
      (CMat(2, 2) << 0, 1, 1, 0).finished(),
      (CMat(2, 2) << 0, cd(0, -1), cd(0, 1), 0).finished(),
      (CMat(2, 2) << 1, 0, 0, -1).finished(),
  };
  return s[k];
}

DensityOperator bloch_state(const Eigen::Vector3d& r) {
  CMat m = 0.5 * CMat::Identity(2, 2);
  for (int k = 0; k < 3; ++k) m += 0.5 * r(k) * pauli(k);
  return DensityOperator(trusted_hermitian(m));
}

// Qubit net: cubic lattice of spacing h in Bloch coordinates, projected onto the ball of
// radius s = 1 - h.  Any Bloch vector is within h of that ball, the ball is within h*sqrt3/2
// of the lattice and projection is non-expansive, so every state lies within
// h(1 + sqrt3/2) = sqrt2/n in Bloch distance, i.e. 1/n in Hilbert-Schmidt distance.
std::vector<DensityOperator> qubit_net(int n, int cap) {
  const double h = std::sqrt(2.0) / (n * (1.0 + std::sqrt(3.0) / 2.0));
  const double s = 1.0 - h;
  const double reach = s + h * std::sqrt(3.0) / 2.0;
  const int kmax = static_cast<int>(std::ceil(reach / h));
  std::map<std::tuple<long long, long long, long long>, int> seen;
  std::vector<DensityOperator> pts;
  for (int i = -kmax; i <= kmax; ++i)
    for (int j = -kmax; j <= kmax; ++j)
      for (int k = -kmax; k <= kmax; ++k) {
        Eigen::Vector3d g(i * h, j * h, k * h);
        if (g.norm() > reach) continue;
        if (g.norm() > s) g *= s / g.norm();
        auto key = std::make_tuple(std::llround(g(0) * 1e9), std::llround(g(1) * 1e9), std::llround(g(2) * 1e9));
        if (!seen.emplace(key, static_cast<int>(pts.size())).second) continue;
        pts.push_back(bloch_state(g));
        if (static_cast<int>(pts.size()) > cap) return pts;
      }
  return pts;
}

double radical_inverse(unsigned long long i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

// Deterministic unitaries: Halton points pushed through the Gaussian quantile, then the
// phase-fixed QR of the resulting 3x3 complex matrix.
CMat halton_unitary(unsigned long long idx) {
  static const int primes[18] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61};
  CMat g(3, 3);
  for (int e = 0; e < 9; ++e) {
    double u0 = radical_inverse(idx + 1, primes[2 * e]);
    double u1 = radical_inverse(idx + 1, primes[2 * e + 1]);
    u0 = std::clamp(u0, 1e-12, 1.0 - 1e-12);
    u1 = std::clamp(u1, 1e-12, 1.0 - 1e-12);
    g(e / 3, e % 3) = cd(std::sqrt(2.0) * boost::math::erf_inv(2.0 * u0 - 1.0),
                         std::sqrt(2.0) * boost::math::erf_inv(2.0 * u1 - 1.0));
  }
  Eigen::HouseholderQR<CMat> qr(g);
  CMat q = qr.householderQ() * CMat::Identity(3, 3);
  CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < 3; ++i) {
    cd d = r(i, i);
    if (std::abs(d) > 0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

std::vector<DensityOperator> qutrit_net(int n, int cap) {
  const double eps = 1.0 / (n + 1.0);
  const unsigned long long nu = static_cast<unsigned long long>(n) * n * n;
  std::vector<DensityOperator> pts;
  for (int i = n; i >= 0; --i)
    for (int j = std::min(i, n - i); j >= 0; --j) {
      int k = n - i - j;
      if (k > j) continue;
      RVec lam(3);
      lam << i, j, k;
      lam = (1.0 - eps) * lam / n + RVec::Constant(3, eps / 3.0);
      const unsigned long long count = (i == j && j == k) ? 1 : nu;
      for (unsigned long long u = 0; u < count; ++u) {
        CMat v = halton_unitary(u);
        pts.emplace_back(trusted_hermitian(v * lam.asDiagonal() * v.adjoint()));
        if (static_cast<int>(pts.size()) > cap) return pts;
      }
    }
  return pts;
}

double hs_dist2(const RVec& a, const RVec& b) { return (a - b).squaredNorm(); }

double empirical_radius(const std::vector<DensityOperator>& pts, int dimX, std::uint64_t seed) {
  if (pts.size() <= 1 && dimX == 1) return 0.0;
  std::vector<RVec> coords;
  coords.reserve(pts.size());
  for (const auto& p : pts) coords.push_back(hermitian_coords(p.mat()));
  const size_t nprobe = std::min<size_t>(10 * pts.size(), 20000);
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst = 0.0;
  for (size_t i = 0; i < nprobe; ++i) {
    CMat probe;
    if (dimX == 2) {
      Eigen::Vector3d r;
      do {
        r << unif(rng), unif(rng), unif(rng);
      } while (r.norm() > 1.0);
      probe = bloch_state(r).mat();
    } else {
      probe = (i % 2 == 0 ? random_pure(dimX, rng) : random_density(dimX, rng)).mat();
    }
    RVec c = hermitian_coords(probe);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : coords) best = std::min(best, hs_dist2(c, p));
    worst = std::max(worst, std::sqrt(best));
  }
  return worst;
}

}  // namespace

int default_threads() {
  if (const char* env = std::getenv("QMDP_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    warn("ignoring malformed QMDP_THREADS value");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<DensityOperator> build_net(int dimX, int n, int cap, bool* certified, double* radius) {
  if (n < 1) throw InvalidInput("build_net: resolution must be at least 1");
  std::vector<DensityOperator> pts;
  bool cert = false;
  double rad = 0.0;
  switch (dimX) {
    case 1:
      pts.push_back(DensityOperator::maximally_mixed(1));
      cert = true;
      break;
    case 2:
      pts = qubit_net(n, cap);
      cert = true;
      rad = 1.0 / n;
      break;
    case 3:
      pts = qutrit_net(n, cap);
      break;
    default:
      throw InvalidInput("build_net: state nets are implemented for dimX <= 3");
  }
  if (static_cast<int>(pts.size()) > cap) {
    std::ostringstream os;
    os << "build_net: resolution " << n << " exceeds the cap of " << cap << " points";
    throw InvalidInput(os.str());
  }
  if (certified) *certified = cert;
  if (radius) *radius = rad;
  return pts;
}

int ValueNet::nearest(const HermitianOperator& rho) const {
  int best = -1;
  double bd = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < points.size(); ++i) {
    double d = (points[i].mat() - rho.mat()).squaredNorm();
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw InvalidInput("ValueNet: empty net");
  return best;
}

double ValueNet::evaluate(const HermitianOperator& rho) const { return hs_inner(xis[nearest(rho)], rho); }

ValueNet value_net_open(const QmdpInstance& q, int n, const NetOptions& opts) {
  ValueNet net;
  net.resolution = n;
  double rad = 0.0;
  std::vector<DensityOperator> pts = build_net(q.dimX(), n, opts.cap, &net.radius_certified, &rad);

  struct Slot {
    bool ok = false;
    HermitianOperator xi;
    double value = 0.0;
    std::string status;
  };
  std::vector<Slot> slots(pts.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < pts.size();) {
      try {
        SolveReport r = solve_sdp_open(q.with_rho0(pts[i]), opts.sdp);
        slots[i].status = r.status;
        if (r.optimal) {
          slots[i].ok = true;
          slots[i].xi = r.xi;
          slots[i].value = r.dual_value;
        }
      } catch (const std::exception& e) {
        slots[i].status = e.what();
      }
    }
  };
  const int nt = std::max(1, std::min<int>(opts.threads > 0 ? opts.threads : default_threads(),
                                           static_cast<int>(pts.size())));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (size_t i = 0; i < pts.size(); ++i) {
    if (!slots[i].ok) {
      std::ostringstream os;
      os << "value net: dropping point " << i << " (" << slots[i].status << ")";
      warn(os.str());
      ++net.dropped;
      continue;
    }
    net.points.push_back(pts[i]);
    net.xis.push_back(std::move(slots[i].xi));
    net.dual_values.push_back(slots[i].value);
  }
  if (net.points.empty()) throw NumericalError("value net: every dual solve failed");
  net.covering_radius_empirical = empirical_radius(net.points, q.dimX(), opts.probe_seed);
  net.radius_certified = net.radius_certified && net.dropped == 0;
  net.covering_radius_estimate = net.radius_certified ? rad : net.covering_radius_empirical;
  return net;
}

double bellman_step_open(const QmdpInstance& q, const ValueNet& net, const HermitianOperator& rho) {
  if (rho.dim() != q.dimX()) throw DimensionError("bellman_step_open: rho must act on H_X");
  const int dx = q.dimX(), da = q.dimA();
  const auto& k = q.channel().kraus();
  const double b = q.beta();
  auto f = [&](const CMat& pi) {
    CMat s = kron(rho.mat(), pi);
    return hs_inner(q.cost().mat(), s) + b * net.evaluate(trusted_hermitian(kraus_apply(k, s)));
  };
  CMat pi = CMat::Identity(da, da) / static_cast<double>(da);
  double best = f(pi);
  // V_n is piecewise linear, so each step linearizes at the active net cell.
  for (int it = 0; it < 100; ++it) {
    const HermitianOperator& xi = net.xis[net.nearest(trusted_hermitian(kraus_apply(k, kron(rho.mat(), pi))))];
    CMat g = contract_x(q.cost().mat() + b * kraus_adjoint_apply(k, xi.mat()), rho.mat(), dx, da);
    auto ed = eig_h(trusted_hermitian(0.5 * (g + g.adjoint())));
    CMat s = ed.vectors.col(0) * ed.vectors.col(0).adjoint();
    CMat d = s - pi;
    auto [t, ft] = boost::math::tools::brent_find_minima([&](double t) { return f(pi + t * d); }, 0.0, 1.0, 40);
    double f1 = f(s);
    if (f1 <= ft) {
      t = 1.0;
      ft = f1;
    }
    if (!(ft < best - 1e-15 * (1.0 + std::abs(best)))) break;
    pi = t == 1.0 ? s : CMat(pi + t * d);
    best = ft;
  }
  return best;
}

}  // namespace qmdp
