#include "leqg/cli.hpp"

int main(int argc, char** argv) { return leqg::cli::run_cli(argc, argv); }
