#include "gromovlab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gromovlab::cli::run(argc, argv, std::cout, std::cerr); }
