#include <iostream>

#include "admitrec_cli.hpp"

int main(int argc, char** argv) { return admitrec::cli::run(argc, argv, std::cout, std::cerr); }
