#include "hardylab/cli/commands.hpp"

int main(int argc, char** argv) { return hardylab::cli::run_cli(argc, argv); }
