#include "cli/commands.hpp"

int main(int argc, char** argv) { return polsar::cli::run_cli(argc, argv); }
