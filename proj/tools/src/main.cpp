#include <iostream>

#include "assoc/cli/commands.hpp"

int main(int argc, char** argv) { return assoc::cli::run_cli(argc, argv, std::cout, std::cerr); }
