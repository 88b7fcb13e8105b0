#include <iostream>

#include "knnmt/cli.hpp"

int main(int argc, char** argv) {
    return knnmt::run_cli(argc, argv, std::cout, std::cerr);
}
