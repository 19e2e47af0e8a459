#include <iostream>

#include "kgns/cli.hpp"

int main(int argc, char** argv) { return kgns::run_cli(argc, argv, std::cout, std::cerr); }
