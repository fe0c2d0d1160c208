#include <iostream>
#include <string>
#include <vector>

#include "repairgraph/cli/commands.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return repairgraph::cli::dispatch(args, std::cout, std::cerr);
}
