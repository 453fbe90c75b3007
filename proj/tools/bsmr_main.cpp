#include "bsmr/cli.hpp"

int main(int argc, char** argv) { return bsmr::cli::run(argc, argv); }
