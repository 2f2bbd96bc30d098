#include "seqmarkov/cli.hpp"

int main(int argc, char** argv) { return seqmarkov::cli::main(argc, argv); }
