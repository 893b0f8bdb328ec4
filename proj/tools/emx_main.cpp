#include "emx/cli.hpp"

int main(int argc, char** argv) { return emx::cli_main(argc, argv); }
