#include <iostream>

#include "coqforge/cli.hpp"

int main(int argc, char** argv) { return coqforge::cli::run(argc, argv, std::cout, std::cerr); }
