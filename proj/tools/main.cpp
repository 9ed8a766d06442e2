#include "gfwi_cli/commands.hpp"

int main(int argc, char** argv) { return gfwi::cli::run(argc, argv); }
