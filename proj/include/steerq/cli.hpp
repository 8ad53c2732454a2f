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

// Command-line driver. run_cli() parses arguments, runs one subcommand and
// returns the process exit code; main() in tools/ only forwards to it.

#include <iosfwd>
#include <string>
#include <vector>

#include "steerq/error.hpp"
#include "steerq/io.hpp"

namespace steerq {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

/// Environment variable naming the config file used when --config is absent.
inline constexpr const char *kConfigEnv = "STEERQ_CONFIG";

const char *version();

/// Input problems map to 2, solver failures to 3.
int exit_code_for(ErrorKind kind);

struct VerifyCheck {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  /// Failed only because the configured tolerance is tighter than the
  /// default one.
  bool tolerance_bound = false;
};

/// Regression checks on the worked examples: BB84, the Schmidt family at
/// three profiles with the flat-in-p property, the d = 3 maximally entangled
/// state, the forced-product structure and an LHS corpus of `lhs_items`.
std::vector<VerifyCheck> verify_paper(const RunConfig &cfg, int lhs_items = 50);

Json to_json(const VerifyCheck &c);

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace steerq
