#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return mecsim::cli::run(argc, argv, std::cout, std::cerr); }
