#include <iostream>

#include "pcesocp/cli/experiments.hpp"

int main(int argc, char** argv) { return pcesocp::cli::run_cli(argc, argv, std::cout, std::cerr); }
