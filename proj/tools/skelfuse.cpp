#include "skelfuse/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return skelfuse::cli::run(argc, argv, std::cout, std::cerr); }
