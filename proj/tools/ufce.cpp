#include <iostream>

#include "ufce/cli.hpp"

int main(int argc, char** argv) { return ufce::run_cli(argc, argv, std::cout, std::cerr); }
