#include "bspring/cli.hpp"

int main(int argc, char** argv) { return bspring::run_cli(argc, argv); }
