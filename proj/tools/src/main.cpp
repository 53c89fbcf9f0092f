#include <iostream>

#include "rulforge/cli.hpp"

int main(int argc, char** argv) { return rulforge::cli::run(argc, argv, std::cout, std::cerr); }
