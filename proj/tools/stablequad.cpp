#include "stablequad/cli.hpp"

int main(int argc, char** argv) { return stablequad::cli::run_cli(argc, argv); }
