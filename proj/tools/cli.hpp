#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace jigsaw::cli {

// Exit codes: 0 success, 1 runtime failure, 2 bad usage or incompatible input.
int run(int argc, char** argv);
// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jigsaw::cli
