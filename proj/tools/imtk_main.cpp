// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "imtk/cli.hpp"

int main(int argc, char** argv) { return imtk::cli::run(argc, argv, std::cout, std::cerr); }
