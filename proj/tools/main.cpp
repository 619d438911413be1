#include "plangan/cli.hpp"

int main(int argc, char** argv) { return plangan::cli::main(argc, argv); }
