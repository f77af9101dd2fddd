#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace casper {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 audit failure.
// args excludes the program name.
int run_cli(std::vector<std::string> args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace casper
