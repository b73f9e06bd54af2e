#include "mxrot/cli.hpp"

int main(int argc, char** argv) { return mxrot::cli::run(argc, argv); }
