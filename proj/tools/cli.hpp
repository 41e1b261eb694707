#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pml::cli {

enum ExitCode : int {
  kOk = 0,
  kViolations = 1,
  kUsage = 2,
  kPartialFailure = 3,
};

/// Runs the pml command line; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Thread count from PML_THREADS, defaulting to the logical core count.
std::size_t default_threads();

}  // namespace pml::cli
