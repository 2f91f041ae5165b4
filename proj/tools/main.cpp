#include "collusim/cli.hpp"

int main(int argc, char** argv) { return collusim::cli_main(argc, argv); }
