#include "numit/cli.hpp"

int main(int argc, char** argv) { return numit::cli_dispatch(argc, argv); }
