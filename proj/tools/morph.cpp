#include <iostream>

#include "morph/cli.hpp"

int main(int argc, char **argv) { return morph::run_cli(argc, argv, std::cout, std::cerr); }
