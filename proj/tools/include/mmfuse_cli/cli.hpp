#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace mmfuse::cli {

/// Runs one subcommand. `args` excludes the program name. Returns the exit
/// code: 0 success, 1 domain error, 2 usage or I/O error.
int run_cli(std::vector<std::string> args, std::ostream& out,
            std::ostream& err);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `key=value` lines; blank lines and lines starting with '#' are skipped.
KeyValues read_key_values(std::istream& in);

}  // namespace mmfuse::cli
