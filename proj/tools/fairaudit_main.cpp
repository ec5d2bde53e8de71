#include "fairaudit/cli.hpp"

int main(int argc, char** argv) { return fairaudit::run_cli(argc, argv); }
