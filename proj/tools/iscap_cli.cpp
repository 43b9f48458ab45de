#include "iscap/cli.hpp"

int main(int argc, char** argv) { return iscap::run_cli(argc, argv); }
