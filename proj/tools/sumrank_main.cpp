#include "sumrank/cli.hpp"

int main(int argc, char** argv) { return sumrank::run_command(argc, argv); }
