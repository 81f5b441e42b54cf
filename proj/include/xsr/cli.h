//
// Copyright 2026 The XSR Authors
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
//
#ifndef XSR_CLI_H_
#define XSR_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "xsr/config.h"

namespace xsr {

// Command-specific inputs that are not part of AppConfig.
struct CommandArgs {
  std::string query;                 // retrieve: a single query text
  std::string param = "cmd_rate";    // sweep: lambda | cmd_rate
  std::vector<double> values;        // sweep
  std::vector<std::uint64_t> seeds;  // sweep; defaults to the config seed
  double tolerance = 1e-4;           // gradcheck
};

const std::vector<std::string>& command_names();

// Runs one command with a fully resolved configuration. Returns the exit
// status; diagnostics go to `err`.
int dispatch(const std::string& command, const CommandArgs& args, const AppConfig& config,
             std::ostream& out, std::ostream& err);

// Parses argv (config file, XSR_SEED, then flags, later ones winning) and
// dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace xsr

#endif  // XSR_CLI_H_
