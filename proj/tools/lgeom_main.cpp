#include "lgeom/cli.hpp"

int main(int argc, char** argv) { return lgeom::run_cli(argc, argv); }
