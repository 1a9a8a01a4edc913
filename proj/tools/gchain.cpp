#include <iostream>

#include "gchain/cli.hpp"

int main(int argc, char** argv) { return gchain::cli::run(argc, argv, std::cout, std::cerr); }
