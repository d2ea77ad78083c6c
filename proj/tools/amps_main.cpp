#include "amps/cli.hpp"

int main(int argc, char** argv) { return amps::cli::run(argc, argv); }
