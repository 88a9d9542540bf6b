#include "khabi/cli.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    return khabi::cli::run(argc, argv, std::cout, std::cerr, std::getenv("KHABI_TOL"));
}
