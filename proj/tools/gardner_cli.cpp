#include <gardner/cli.hpp>
#include <iostream>

int main(int argc, char** argv)
{
    return gardner::cli::run(argc, argv, std::cout, std::cerr);
}
