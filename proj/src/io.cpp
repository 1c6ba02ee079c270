#include "qmdp/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qmdp::io {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << v;
  return os.str();
}

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw ParseError(std::string("missing field '") + name + "'");
  return j.at(name);
}

int int_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_integer()) throw ParseError(std::string("field '") + name + "' must be an integer");
  long long x = v.get<long long>();
  if (x <= 0 || x > 64) throw ParseError(std::string("field '") + name + "' out of range");
  return static_cast<int>(x);
}

double real_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number()) throw ParseError(std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

cd parse_scalar(const json& v, const std::string& what) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ParseError(what + ": complex entries must be numbers or [re, im] pairs");
}

double hermitian_residual(const CMat& m) { return (m - m.adjoint()).norm(); }

void require_hermitian(const CMat& m, const std::string& what) {
  if (!m.allFinite()) throw ValidationError(what + ": non-finite entry");
  double r = hermitian_residual(m);
  if (r > Tolerances{}.symmetrize)
    throw ValidationError(what + " is not Hermitian: ||M - M^dag||_F = " + fmt(r));
}

QmdpInstance parse_qmdp(const json& j) {
  const int dx = int_field(j, "dimX"), da = int_field(j, "dimA");
  const int n = dx * da;
  const double beta = real_field(j, "beta");
  CMat rho0 = parse_matrix(field(j, "rho0"), dx, dx, "rho0");
  CMat cost = parse_matrix(field(j, "cost"), n, n, "cost");
  const json& ch = field(j, "channel");
  std::vector<CMat> kraus;
  if (ch.is_object() && ch.contains("kraus")) {
    const json& ks = ch.at("kraus");
    if (!ks.is_array() || ks.empty()) throw ParseError("channel.kraus must be a non-empty array");
    for (size_t i = 0; i < ks.size(); ++i)
      kraus.push_back(parse_matrix(ks[i], dx, n, "channel.kraus[" + std::to_string(i) + "]"));
  } else if (ch.is_object() && ch.contains("choi")) {
    CMat c = parse_matrix(ch.at("choi"), n * dx, n * dx, "channel.choi");
    require_hermitian(c, "channel Choi matrix");
    ChoiMatrix cm = ChoiMatrix::unchecked(n, dx, HermitianOperator(c));
    CptpReport rep = verify_cptp(cm, 1e-9);
    if (rep.psd_margin < -1e-9)
      throw ValidationError("channel complete positivity violated: Choi lambda_min = " + fmt(rep.psd_margin));
    if (rep.tp_residual > 1e-9)
      throw ValidationError("channel trace preservation violated: ||Tr_out(C) - Id||_F = " + fmt(rep.tp_residual));
    kraus = choi_to_kraus(cm).kraus();
  } else {
    throw ParseError("channel must contain 'kraus' or 'choi'");
  }

  if (!(beta >= 0.0 && beta < 1.0)) throw ValidationError("beta must lie in [0, 1): got " + fmt(beta));
  require_hermitian(cost, "cost");
  require_hermitian(rho0, "rho0");
  HermitianOperator rh(rho0);
  double tr_res = std::abs(rh.trace() - 1.0);
  if (tr_res > Tolerances{}.trace) throw ValidationError("rho0 trace condition violated: |Tr rho0 - 1| = " + fmt(tr_res));
  double lmin = min_eig(rh);
  if (lmin < -Tolerances{}.psd) throw ValidationError("rho0 positivity violated: lambda_min = " + fmt(lmin));
  CMat s = CMat::Zero(n, n);
  for (const auto& k : kraus) {
    if (!k.allFinite()) throw ValidationError("channel: non-finite Kraus entry");
    s += k.adjoint() * k;
  }
  double tp = (s - CMat::Identity(n, n)).norm();
  if (tp > 1e-9) throw ValidationError("channel trace preservation violated: ||sum K^dag K - Id||_F = " + fmt(tp));
  return QmdpInstance(dx, da, KrausChannel(n, dx, std::move(kraus)), HermitianOperator(cost), beta,
                      DensityOperator(rh));
}

std::pair<ClassicalMdp, std::optional<RVec>> parse_classical(const json& j) {
  const int nx = int_field(j, "nx"), na = int_field(j, "na");
  const double beta = real_field(j, "beta");
  const json& pj = field(j, "p");
  if (!pj.is_array() || static_cast<int>(pj.size()) != nx) throw ParseError("p must be an nx-array indexed [x][a][y]");
  std::vector<double> p(static_cast<size_t>(nx) * nx * na);
  for (int x = 0; x < nx; ++x) {
    if (!pj[x].is_array() || static_cast<int>(pj[x].size()) != na) throw ParseError("p[x] must have na entries");
    for (int a = 0; a < na; ++a) {
      RVec col = parse_real_vector(pj[x][a], nx, "p[x][a]");
      for (int y = 0; y < nx; ++y) p[(static_cast<size_t>(y) * nx + x) * na + a] = col(y);
    }
  }
  const json& cj = field(j, "c");
  if (!cj.is_array() || static_cast<int>(cj.size()) != nx) throw ParseError("c must be an nx x na table");
  RMat c(nx, na);
  for (int x = 0; x < nx; ++x) c.row(x) = parse_real_vector(cj[x], na, "c[x]").transpose();
  std::optional<RVec> mu0;
  if (j.contains("mu0")) mu0 = parse_real_vector(j.at("mu0"), nx, "mu0");

  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("beta must lie in (0, 1): got " + fmt(beta));
  if (!c.allFinite()) throw ValidationError("cost table has a non-finite entry");
  for (int x = 0; x < nx; ++x)
    for (int a = 0; a < na; ++a) {
      double s = 0.0, mn = 0.0;
      for (int y = 0; y < nx; ++y) {
        double v = p[(static_cast<size_t>(y) * nx + x) * na + a];
        s += v;
        mn = std::min(mn, v);
      }
      if (mn < 0.0) throw ValidationError("transition p(.|" + std::to_string(x) + "," + std::to_string(a) +
                                          ") has a negative entry " + fmt(mn));
      if (std::abs(s - 1.0) > 1e-12)
        throw ValidationError("transition stochasticity violated: p(.|" + std::to_string(x) + "," +
                              std::to_string(a) + ") sums to 1 + " + fmt(s - 1.0));
    }
  if (mu0) {
    if (mu0->minCoeff() < 0.0) throw ValidationError("mu0 has a negative entry " + fmt(mu0->minCoeff()));
    if (std::abs(mu0->sum() - 1.0) > 1e-9) throw ValidationError("mu0 sums to 1 + " + fmt(mu0->sum() - 1.0));
  }
  return {ClassicalMdp(nx, na, std::move(p), std::move(c), beta), mu0};
}

}  // namespace

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError("cannot move output into place at " + path);
  }
}

CMat parse_matrix(const json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw ParseError(what + ": expected " + std::to_string(rows) + " rows");
  CMat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
      throw ParseError(what + ": row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c) m(r, c) = parse_scalar(j[r][c], what);
  }
  return m;
}

RVec parse_real_vector(const json& j, int n, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ParseError(what + ": expected " + std::to_string(n) + " entries");
  RVec v(n);
  for (int i = 0; i < n; ++i) {
    if (!j[i].is_number()) throw ParseError(what + ": entries must be numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

json matrix_to_json(const CMat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

json real_vector_to_json(const RVec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

ProblemFile parse_problem(const json& j) {
  ProblemFile f;
  const json& k = field(j, "kind");
  if (!k.is_string()) throw ParseError("field 'kind' must be a string");
  f.kind = k.get<std::string>();
  try {
    if (f.kind == "qmdp") {
      f.qmdp = parse_qmdp(j);
    } else if (f.kind == "classical-mdp") {
      auto [mdp, mu0] = parse_classical(j);
      f.classical = std::move(mdp);
      f.mu0 = std::move(mu0);
    } else {
      throw ParseError("unknown kind '" + f.kind + "'");
    }
  } catch (const DimensionError& e) {
    throw ParseError(e.what());
  } catch (const InvalidInput& e) {
    throw ValidationError(e.what());
  }
  f.digest = digest(j);
  return f;
}

ProblemFile load_problem(const std::string& path) { return parse_problem(read_json_file(path)); }

json instance_to_json(const QmdpInstance& q) {
  json ks = json::array();
  for (const auto& k : q.channel().kraus()) ks.push_back(matrix_to_json(k));
  return json{{"kind", "qmdp"},
              {"dimX", q.dimX()},
              {"dimA", q.dimA()},
              {"beta", q.beta()},
              {"rho0", matrix_to_json(q.rho0().mat())},
              {"cost", matrix_to_json(q.cost().mat())},
              {"channel", {{"kraus", ks}}}};
}

json classical_to_json(const ClassicalMdp& mdp, const std::optional<RVec>& mu0) {
  json p = json::array();
  for (int x = 0; x < mdp.nx(); ++x) {
    json row = json::array();
    for (int a = 0; a < mdp.na(); ++a) {
      json col = json::array();
      for (int y = 0; y < mdp.nx(); ++y) col.push_back(mdp.p(y, x, a));
      row.push_back(std::move(col));
    }
    p.push_back(std::move(row));
  }
  json c = json::array();
  for (int x = 0; x < mdp.nx(); ++x) c.push_back(real_vector_to_json(mdp.cost().row(x).transpose()));
  json j{{"kind", "classical-mdp"}, {"nx", mdp.nx()}, {"na", mdp.na()}, {"beta", mdp.beta()}, {"p", p}, {"c", c}};
  if (mu0) j["mu0"] = real_vector_to_json(*mu0);
  return j;
}

json policy_to_json(const OpenLoopPolicy& p) {
  if (p.pis.size() == 1) return json{{"type", "open-loop"}, {"pi", matrix_to_json(p.pis[0].mat())}};
  json seq = json::array();
  for (const auto& pi : p.pis) seq.push_back(matrix_to_json(pi.mat()));
  return json{{"type", "open-loop"}, {"sequence", seq}};
}

json policy_to_json(const CspPolicyChannel& g) {
  return json{{"type", "csp"},
              {"in_dim", g.choi().in_dim()},
              {"out_dim", g.choi().out_dim()},
              {"choi", matrix_to_json(g.choi().matrix().mat())}};
}

Policy policy_from_json(const json& j0, int dimX, int dimA) {
  const json& j = (j0.is_object() && j0.contains("policy")) ? j0.at("policy") : j0;
  const json& t = field(j, "type");
  if (!t.is_string()) throw ParseError("policy type must be a string");
  try {
    if (t == "open-loop") {
      OpenLoopPolicy p;
      auto load = [&](const json& m) {
        CMat pi = parse_matrix(m, dimA, dimA, "policy pi");
        require_hermitian(pi, "policy pi");
        p.pis.emplace_back(HermitianOperator(pi));
      };
      if (j.contains("pi")) {
        load(j.at("pi"));
      } else {
        const json& seq = field(j, "sequence");
        if (!seq.is_array() || seq.empty()) throw ParseError("policy sequence must be a non-empty array");
        for (const auto& m : seq) load(m);
      }
      return p;
    }
    if (t == "csp") {
      const int n = dimX * dimA;
      CMat c = parse_matrix(field(j, "choi"), dimX * n, dimX * n, "policy choi");
      require_hermitian(c, "policy Choi matrix");
      return CspPolicyChannel(ChoiMatrix(dimX, n, HermitianOperator(c)), dimX, dimA);
    }
  } catch (const InvalidInput& e) {
    throw ValidationError(e.what());
  }
  throw ParseError("unknown policy type");
}

std::string digest(const json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace qmdp::io
