#include "cbipc/cli.hpp"

int main(int argc, char** argv) { return cbipc::cli::main(argc, argv); }
