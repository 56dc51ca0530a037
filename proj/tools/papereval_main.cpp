#include "papereval/cli.hpp"

int main(int argc, char** argv) { return papereval::cli::main(argc, argv); }
