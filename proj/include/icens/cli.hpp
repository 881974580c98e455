#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace icens::cli {

// Runs one subcommand. args excludes the program name. Results go to the
// files named by --output (stdout when absent); failures print a JSON error
// object on `err` and return nonzero.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace icens::cli
