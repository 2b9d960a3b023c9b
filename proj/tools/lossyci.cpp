#include <iostream>

#include <lossyci/cli.hpp>

int main(int argc, char** argv) { return lossyci::cli::run(argc, argv, std::cout, std::cerr); }
