#include "cli.hpp"

int main(int argc, char** argv) { return mpfusion::cli::main(argc, argv); }
