#include <cstdlib>
#include <iostream>

#include "freemax_cli.hpp"

int main(int argc, char** argv) {
    freemax::cli::Environment env;
    if (const char* t = std::getenv("FREEMAX_THREADS")) env.threads = t;
    const std::vector<std::string> args(argv + 1, argv + argc);
    return freemax::cli::run(args, std::cout, std::cerr, env);
}
