#include "ealoc/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ealoc::run_cli(argc, argv, std::cout, std::cerr); }
