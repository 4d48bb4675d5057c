#pragma once

#include <string>
#include <vector>

namespace mcgc {

/// Runs one command-line invocation. `args` is argv without the program
/// name, in natural order. Returns the process exit code: 0 on success,
/// 1 on validation/usage errors, 2 on I/O errors.
int dispatch(const std::vector<std::string>& args);

} // namespace mcgc
