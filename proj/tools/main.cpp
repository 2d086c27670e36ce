#include <iostream>

#include "gaborikl/cli.hpp"

int main(int argc, char** argv) { return gaborikl::cli::run(argc, argv, std::cout, std::cerr); }
