#include <iostream>

#include "cli/commands.hpp"

int main(int argc, char** argv) { return semistab::cli::cli_main(argc, argv, std::cout, std::cerr); }
