#include <iostream>

#include "measched/cli.hpp"

int main(int argc, char** argv) { return measched::run_cli(argc, argv, std::cout, std::cerr); }
