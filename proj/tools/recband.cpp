#include "cli.hpp"

int main(int argc, char** argv) { return recband::cli::cli_main(argc, argv); }
