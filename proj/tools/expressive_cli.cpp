#include "expressive/cli.hpp"

int main(int argc, char** argv) { return expressive::cli::run(argc, argv); }
