#include "conlab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return conlab::run_cli(argc, argv, std::cout, std::cerr); }
