#include <iostream>

#include "toolcal/cli.hpp"

int main(int argc, char** argv)
{
    return toolcal::run_cli(argc, argv, std::cout, std::cerr);
}
