#include "gpcca/cli/app.hpp"

#include <iostream>

int main(int argc, char** argv) { return gpcca::cli::run(argc, argv, std::cout, std::cerr); }
