#include "cogflow/cli.hpp"

int main(int argc, char** argv) { return cogflow::run_cli(argc, argv); }
