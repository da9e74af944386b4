// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "mtr/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return mtr::run_cli(args, std::cout, std::cerr);
}
