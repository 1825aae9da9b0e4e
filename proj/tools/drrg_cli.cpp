#include <iostream>

#include "drrg/cli.hpp"

int main(int argc, char** argv) { return drrg::cli_main(argc, argv, std::cout, std::cerr); }
