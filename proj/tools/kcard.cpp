#include "kcard/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return kcard::run_cli(argc, argv, std::cout, std::cerr); }
