#include "cli.hpp"

int main(int argc, char** argv) { return proxytd::cli::run_cli(argc, argv); }
