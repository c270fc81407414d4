#include <iostream>

#include "virtcam/cli.hpp"

int main(int argc, char** argv) { return virtcam::cli::main(argc, argv, std::cout, std::cerr); }
