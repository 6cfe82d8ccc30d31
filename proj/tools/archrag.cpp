#include <iostream>

#include "archrag/app/cli.hpp"

int main(int argc, char** argv) { return archrag::app::run_cli(argc, argv, std::cout, std::cerr); }
