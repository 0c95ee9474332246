#include <iostream>

#include "burst/cli.hpp"

int main(int argc, char** argv) { return burst::cli::run(argc, argv, std::cout, std::cerr); }
