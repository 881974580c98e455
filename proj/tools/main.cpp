#include "icens/cli.hpp"

int main(int argc, char** argv) { return icens::cli::run(argc, argv); }
