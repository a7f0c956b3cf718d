#include <iostream>

#include "mikado/cli.hpp"

int main(int argc, char** argv) { return mikado::cli_main(argc, argv, std::cout, std::cerr); }
