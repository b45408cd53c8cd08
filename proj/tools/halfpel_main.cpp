#include "halfpel/cli.hpp"

int main(int argc, char** argv) { return halfpel::run_cli(argc, argv); }
