#ifndef DISPCOMP_CLI_HPP
#define DISPCOMP_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace dispcomp::cli {

/// Runs one subcommand. args excludes the program name. Returns the exit
/// status; diagnostics go to err as a single "error: ..." line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dispcomp::cli

#endif  // DISPCOMP_CLI_HPP
