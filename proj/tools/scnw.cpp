#include "scnw/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return scnw::cli::run(argc, argv, std::cout, std::cerr); }
