#pragma once
// Command-line front end.  run() is the whole program (main is a one-line
// wrapper) and is callable in-process from tests.

#include <string>
#include <vector>

namespace zsmstm::cli {

// argv-style entry point; returns the process exit code:
//   0 success, 2 bad usage/config, 3 data or IO failure, 4 numeric divergence
int run(int argc, const char* const* argv);

// convenience overload; args excludes the program name
int run(const std::vector<std::string>& args);

}  // namespace zsmstm::cli
