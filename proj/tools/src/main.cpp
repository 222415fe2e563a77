#include "wmcf/cli/app.hpp"

int main(int argc, char** argv) { return wmcf::cli::main_cli(argc, argv); }
