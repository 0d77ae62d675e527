#include "svgmrf/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return svgmrf::run_cli(argc, argv, std::cout, std::cerr);
}
