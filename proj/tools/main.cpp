#include <iostream>

#include "cvt/cli.hpp"

int main(int argc, char** argv) { return cvt::cli::run(argc, argv, std::cout, std::cerr); }
