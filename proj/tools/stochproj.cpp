#include "stochproj/cli.hpp"

int main(int argc, char** argv) { return stochproj::cli::run(argc, argv); }
