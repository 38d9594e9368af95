#include "bliss/cli.hpp"

int main(int argc, char** argv) { return bliss::run_cli(argc, argv); }
