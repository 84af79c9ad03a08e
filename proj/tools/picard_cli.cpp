#include <iostream>

#include "picard/cli.hpp"

int main(int argc, char** argv) { return picard::cli::run_cli(argc, argv, std::cout, std::cerr); }
