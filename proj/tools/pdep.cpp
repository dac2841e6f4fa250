#include <iostream>

#include "pdep/cli.hpp"

int main(int argc, char** argv) { return pdep::cli::run(argc, argv, std::cout, std::cerr); }
