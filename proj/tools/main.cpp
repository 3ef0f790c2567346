#include "retigrade/cli.hpp"

int main(int argc, char** argv) { return retigrade::run_cli(argc, argv); }
