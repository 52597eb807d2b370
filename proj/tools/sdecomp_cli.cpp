#include "sdecomp/cli.hpp"

int main(int argc, char** argv) { return sdecomp::run_cli(argc, argv); }
