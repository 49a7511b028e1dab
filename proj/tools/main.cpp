#include "bhmds/cli.hpp"

int main(int argc, char** argv) { return bhmds::cli::run(argc, argv); }
