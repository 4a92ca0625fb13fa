#include <iostream>

#include "seaforge/cli.hpp"

int main(int argc, char** argv) { return seaforge::cli_dispatch(argc, argv, std::cout, std::cerr); }
