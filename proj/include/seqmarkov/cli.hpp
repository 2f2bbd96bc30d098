#ifndef SEQMARKOV_CLI_HPP
#define SEQMARKOV_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace seqmarkov::cli {

// Runs one command line (without the program name) and returns the exit
// status: 0 on success, 1 when the run fails, 2 on a usage error. Failures
// print a single line "error[<class>]: <message>" to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, const char* const* argv);

}  // namespace seqmarkov::cli

#endif  // SEQMARKOV_CLI_HPP
