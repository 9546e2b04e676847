#include "fmdp/harness.hpp"

#include <iostream>

int main(int argc, char** argv) { return fmdp::run_cli(argc, argv, std::cout, std::cerr); }
