// specbath - command-line entry point; see `specbath --help`.
#include <iostream>
#include <string>
#include <vector>

#include "specbath/cli.hpp"

int main(int argc, char** argv) {
    return specbath::cli::dispatch(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
