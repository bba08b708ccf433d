#include "llql/cli.hpp"

int main(int argc, char** argv) { return llql::run_cli(argc, argv); }
