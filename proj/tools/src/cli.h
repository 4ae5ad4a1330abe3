// Copyright 2026 The o2il Authors
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

#ifndef O2IL_TOOLS_CLI_H_
#define O2IL_TOOLS_CLI_H_

#include <string>
#include <vector>

namespace o2il::cli {

// Exit codes.
constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kNumericalFailure = 2;

// Parses argv and runs one subcommand. Never throws.
int command_dispatch(int argc, const char* const* argv);
// args[0] is the program name.
int command_dispatch(const std::vector<std::string>& args);

}  // namespace o2il::cli

#endif  // O2IL_TOOLS_CLI_H_
