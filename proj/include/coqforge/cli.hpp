#pragma once

#include <ostream>

namespace coqforge::cli {

enum ExitCode : int {
  kOk = 0,
  kRuntimeError = 1,
  kUsageError = 2,
  kExternalServiceError = 3,
};

/// Entry point of the coq-forge executable. Data goes only to declared
/// output paths (or `out` where a command documents it); diagnostics go to
/// `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace coqforge::cli
