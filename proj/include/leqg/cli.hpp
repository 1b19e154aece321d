#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace leqg::cli {

// Front-end entry point; `args` excludes the program name. Exit codes:
//   0  success
//   1  verification failure (reproduce digest, verify oracle suite)
//   2  usage or configuration error
//   3  numerical failure
//   4  saddle conditions unverified (outputs are still written)
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

// argv form used by the binary; forwards to the stream overload on
// std::cout / std::cerr.
int run_cli(int argc, char** argv);

}  // namespace leqg::cli
