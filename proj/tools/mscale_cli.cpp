#include "mscale/cli.hpp"

int main(int argc, char** argv) { return mscale::cli::run(argc, argv); }
