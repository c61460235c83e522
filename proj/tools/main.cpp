#include <iostream>

#include "locind/cli.hpp"

int main(int argc, char** argv) { return locind::cli::run(argc, argv, std::cout, std::cerr); }
