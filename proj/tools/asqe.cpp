#include "asqe/cli.hpp"

int main(int argc, char** argv) { return asqe::run_command(argc, argv); }
