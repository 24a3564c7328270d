#include <iostream>

#include "ivdtr/cli.hpp"

int main(int argc, char** argv) {
    return ivdtr::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
