#include <iostream>

#include "affdim/cli.hpp"

int main(int argc, char** argv) { return affdim::run(argc, argv, std::cout, std::cerr); }
