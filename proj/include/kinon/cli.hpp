#ifndef KINON_CLI_HPP
#define KINON_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace kinon {

/// Entry point of the `kinon` tool: run, sweep, render, analyze.
/// `args` excludes the program name. Returns the process exit code.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kinon

#endif  // KINON_CLI_HPP
