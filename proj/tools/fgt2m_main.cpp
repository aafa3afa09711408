#include "fgt2m/cli.hpp"

int main(int argc, char** argv) { return fgt2m::cli::run(argc, argv); }
