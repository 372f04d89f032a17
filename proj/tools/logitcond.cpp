#include "logitcond/cli.hpp"

int main(int argc, char** argv) { return logitcond::cli::main(argc, argv); }
