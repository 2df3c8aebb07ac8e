#include <iostream>

#include "vfe/cli.hpp"

int main(int argc, char** argv) { return vfe::cli::main(argc, argv, std::cout, std::cerr); }
