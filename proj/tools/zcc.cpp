#include <iostream>

#include "zccloud/cli.hpp"

int main(int argc, char** argv) { return zcc::run_cli(argc, argv, std::cout, std::cerr); }
