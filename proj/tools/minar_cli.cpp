#include "cli.hpp"

int main(int argc, char** argv) { return minar::cli::run_cli(argc, argv); }
