#include "engage/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return engage::run_cli(argc, argv, std::cout, std::cerr);
}
