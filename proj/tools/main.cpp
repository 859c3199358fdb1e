#include "detkit/cli.hpp"

int main(int argc, char** argv) { return detkit::run_cli(argc, argv); }
