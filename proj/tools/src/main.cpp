#include <iostream>

#include "ddisac_cli/app.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return ddisac::cli::run_cli(args, std::cout, std::cerr);
}
