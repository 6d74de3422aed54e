#include <iostream>

#include "mott/cli.hpp"

int main(int argc, char** argv) { return mott::run_cli(argc, argv, std::cout, std::cerr); }
