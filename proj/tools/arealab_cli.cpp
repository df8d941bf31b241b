#include "arealab/cli.hpp"

int main(int argc, char **argv) { return arealab::cli::main(argc, argv); }
