#include "inpc/cli.hpp"

int main(int argc, char** argv) { return inpc::cli::run(argc, argv); }
