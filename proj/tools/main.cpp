#include <iostream>

#include "warpforge/cli.hpp"

int main(int argc, char** argv) { return warpforge::run_cli(argc, argv, std::cout, std::cerr); }
