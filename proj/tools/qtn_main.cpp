#include <iostream>

#include "qtn/cli_options.hpp"

int main(int argc, char** argv) { return qtn::run_cli(argc, argv, std::cout, std::cerr); }
