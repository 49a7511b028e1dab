#pragma once

#include <string>
#include <vector>

namespace bhmds::cli {

/// Entry point of the bhmds tool. Returns 0 on success, 2 for invalid
/// input, 3 for numerical failure and 4 for I/O errors.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace bhmds::cli
