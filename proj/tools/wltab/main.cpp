#include "wltab/cli.hpp"

int main(int argc, char** argv) { return wltab::cli::run(argc, argv); }
