// Copyright 2026 The steerq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// JSON encodings. A matrix is a list of rows whose entries are [re, im]
// pairs; assemblages list ops[x][a]; every reader checks shapes and throws
// argument errors naming the offending field.

#include <string>
#include <vector>

#include <json.hpp>

#include "steerq/assemblage.hpp"
#include "steerq/extension.hpp"
#include "steerq/lhs.hpp"
#include "steerq/locc.hpp"
#include "steerq/steer.hpp"

namespace steerq {

using Json = nlohmann::ordered_json;

Json to_json(const Matrix &m);
Matrix matrix_from_json(const Json &j, const std::string &what);

/// Assemblage fields with the operators exactly as stored, before any
/// Hermiticity or positivity check.
struct RawAssemblage {
  int dim_B = 0;
  int num_inputs = 0;
  int num_outputs = 0;
  std::vector<Matrix> ops;  // index a + |A| x
};

RawAssemblage raw_assemblage_from_json(const Json &j);
/// Throws an argument error when an operator is not Hermitian within 1e-9.
Assemblage assemblage_from_json(const Json &j);
Json to_json(const Assemblage &a);

Json to_json(const JointAssemblage &j);
JointAssemblage joint_assemblage_from_json(const Json &j);

Json to_json(const LhsModel &m);
LhsModel lhs_model_from_json(const Json &j);

Json to_json(const NSExtension &e);
NSExtension extension_from_json(const Json &j);

Json to_json(const Instrument &inst);
Instrument instrument_from_json(const Json &j);
Json to_json(const ClassicalChannel &c);
ClassicalChannel channel_from_json(const Json &j);

Json to_json(const ValidationReport &r);
Json to_json(const CqState &s);
Json to_json(const LhsResult &r);
Json to_json(const SteeringEstimate &e);
Json to_json(const PropertyReport &r);

/// Pass/fail tolerances of the worked-example regression checks (verify-paper).
struct VerifyTolerances {
  double bb84 = 2e-3;
  double schmidt = 5e-3;
  double maximally_entangled = 5e-3;
  double lhs = 5e-3;
};

struct RunConfig {
  SteerConfig steer;
  VerifyTolerances verify;
  std::string out;  // report path; empty: none
};

/// Search settings at the top level, every tolerance under "tolerances".
/// Absent keys keep their defaults; unknown keys and out-of-range values are
/// argument errors. dim_E = 0 and grid = 0 select the automatic values.
Json to_json(const RunConfig &c);
RunConfig config_from_json(const Json &j);

/// Parses a file; syntax errors become argument errors with line and column.
Json read_json_file(const std::string &path);
Json parse_json(const std::string &text, const std::string &source);
void write_json_file(const std::string &path, const Json &j);

}  // namespace steerq
