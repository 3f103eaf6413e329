#include "slsm/cli.hpp"

int main(int argc, char** argv) { return slsm::cli::main_entry(argc, argv); }
