#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qmdp/classical.hpp"
#include "qmdp/instance.hpp"
#include "qmdp/qsolve.hpp"

namespace qmdp::io {

using json = nlohmann::json;

// Malformed files: bad JSON, missing fields, wrong shapes.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Well-formed files whose data break an invariant; message carries the measured residual.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProblemFile {
  std::string kind;  // "qmdp" or "classical-mdp"
  std::optional<QmdpInstance> qmdp;
  std::optional<ClassicalMdp> classical;
  std::optional<RVec> mu0;  // classical initial distribution, when given
  std::string digest;
};

json read_json_file(const std::string& path);
void write_atomic(const std::string& path, const std::string& content);

// Complex scalars are [re, im]; plain numbers are read as real.
CMat parse_matrix(const json& j, int rows, int cols, const std::string& what);
RVec parse_real_vector(const json& j, int n, const std::string& what);
json matrix_to_json(const CMat& m);
json real_vector_to_json(const RVec& v);

ProblemFile parse_problem(const json& j);
ProblemFile load_problem(const std::string& path);

json instance_to_json(const QmdpInstance& q);
json classical_to_json(const ClassicalMdp& mdp, const std::optional<RVec>& mu0);

json policy_to_json(const OpenLoopPolicy& p);
json policy_to_json(const CspPolicyChannel& g);
// Accepts a bare policy payload or any object with a "policy" member.
Policy policy_from_json(const json& j, int dimX, int dimA);

// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string digest(const json& j);

}  // namespace qmdp::io
