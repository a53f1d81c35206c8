#include "promot/cli.hpp"

int main(int argc, char** argv) { return promot::cli_main(argc, argv); }
