#include "roughflow/harness/cli.hpp"

int main(int argc, char** argv) { return roughflow::harness::cli_dispatch(argc, argv); }
